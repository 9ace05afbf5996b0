from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from jamison.snf import det, identity, is_smith_form, matmul, smith_normal_form


def test_zero_matrix_is_fixed():
    d = smith_normal_form([[0]])
    assert d.D == [[0]] and d.U == [[1]] and d.V == [[1]]


def test_diagonal_2_3_becomes_1_6():
    d = smith_normal_form([[2, 0], [0, 3]])
    assert d.D == [[1, 0], [0, 6]]
    assert d.diagonal == [1, 6]


def test_identity():
    assert smith_normal_form(identity(2)).D == identity(2)


matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-9, 9), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


@given(matrices)
def test_decomposition_laws(M):
    d = smith_normal_form(M)
    assert matmul(matmul(d.U, M), d.V) == d.D
    assert abs(det(d.U)) == 1 and abs(det(d.V)) == 1
    assert is_smith_form(d.D)


@given(matrices)
def test_rank_matches_nonzero_diagonal(M):
    d = smith_normal_form(M)
    assert d.rank == sum(1 for x in d.diagonal if x)

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from jamison.errors import InsufficientSupport, SupportTooLarge, ValidationError
from jamison.groups import Enumeration, GroupDescriptor
from jamison.weights import SparseVector, subinvariance_check, translation_norm, weight_table


def oracle(enum, atoms, N):
    """sum_{L<=N} 2^-L m^{*L} with m = sum_{n<=atoms} 2^-n delta_{h_n}, by dictionary convolution."""
    m = {enum.h(n): Fraction(1, 2**n) for n in range(1, atoms + 1)}
    level = {enum.group.identity: Fraction(1)}
    total = defaultdict(Fraction)
    for L in range(1, N + 1):
        nxt = defaultdict(Fraction)
        for x, a in level.items():
            for h, b in m.items():
                nxt[x + h] += a * b / 2
        level = nxt
        for x, v in level.items():
            total[x] += v
    return total


def test_exact_table_brackets_oracle(Z):
    enum = Enumeration(Z)
    wt = weight_table(enum, 5, 12, exact=True)
    ref = oracle(enum, wt.atoms, 5)
    for g in wt.elements():
        v = wt.value(g)
        assert v <= ref.get(g, 0) <= v + wt.tail
    assert wt.deficit() == Fraction(1, 2**5)


def test_deficit_exact_at_30(Z):
    wt = weight_table(Enumeration(Z), 30, 30, exact=True)
    assert wt.deficit() == Fraction(1, 2**30)


def test_first_weights(Z):
    enum = Enumeration(Z)
    wt = weight_table(enum, 30, 30, exact=True)
    for n in range(1, 21):
        assert wt.lower(enum.h(n)) >= Fraction(1, 2 ** (n + 1))


def test_identity_translation_is_isometry(Z):
    wt = weight_table(Enumeration(Z), 30, 40, exact=False)
    t = translation_norm(wt, 1, m_max=30)  # h_1 = 0
    assert t.value == 1.0 and t.holds
    r = subinvariance_check(wt, 1)
    assert r.max_ratio == 1.0


def test_translation_norm_cross_check(Z):
    wt = weight_table(Enumeration(Z), 60, 80, exact=False)
    for k in range(2, 5):
        t = translation_norm(wt, k, m_max=60)
        assert t.holds
        assert abs(t.matrix_norm - t.diag_max) < 1e-9


def test_subinvariance_on_torsion_group():
    G = GroupDescriptor(1, (3,))
    wt = weight_table(Enumeration(G), 50, 30, exact=False)
    for l in range(1, 5):
        r = subinvariance_check(wt, l)
        assert r.holds and r.max_ratio > 0


def test_box_budget_and_validation(Z, Zoo):
    with pytest.raises(SupportTooLarge):
        weight_table(Enumeration(GroupDescriptor(3, ())), 10, 200)
    with pytest.raises(ValidationError):
        weight_table(Enumeration(Zoo), 10, 3)
    with pytest.raises(ValidationError):
        weight_table(Enumeration(Z), 0, 3)


def test_translation_leaving_box(Z):
    wt = weight_table(Enumeration(Z), 10, 3, exact=False)
    with pytest.raises(InsufficientSupport):
        translation_norm(wt, 5, m_max=50)


def test_float_and_exact_agree(Z):
    enum = Enumeration(Z)
    a = weight_table(enum, 20, 10, exact=True)
    b = weight_table(enum, 20, 10, exact=False)
    for g in a.elements():
        assert b.lower(g) <= float(a.value(g)) * (1 + 1e-12) and float(a.value(g)) <= b.upper(g) * (1 + 1e-12)


def test_sparse_vectors(Z):
    x = SparseVector.of({Z.element([1]): 2, Z.element([3]): 1j})
    y = x.translate(Z.element([1]))
    assert y.as_dict() == {Z.element([0]): 2, Z.element([2]): 1j}
    assert (x - x).coeffs == ()
    wt = weight_table(Enumeration(Z), 20, 10, exact=False)
    lo, hi = SparseVector.dirac(Z.identity).norm_sq_bounds(wt)
    assert lo <= hi and lo > 0.25


@given(st.integers(2, 8))
def test_translation_within_bound(k):
    wt = _shared_table()
    t = translation_norm(wt, k, m_max=40, cross_check=False)
    assert t.upper <= math.sqrt(2) ** (k + 1)


_cache = {}


def _shared_table():
    if "wt" not in _cache:
        _cache["wt"] = weight_table(Enumeration(GroupDescriptor(1, ())), 80, 90, exact=False)
    return _cache["wt"]

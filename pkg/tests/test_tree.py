from __future__ import annotations

from fractions import Fraction

import pytest

from jamison.characters import chord
from jamison.errors import WitnessUnavailable
from jamison.groups import GroupDescriptor
from jamison.sequences import AllElements, DoubleExponential, Polynomial, SequenceSpec
from jamison.tree import build_character_tree, gap_chain_generate


@pytest.fixture(scope="module")
def chain():
    return gap_chain_generate(SequenceSpec(GroupDescriptor(1, ()), DoubleExponential(2)), 4)


def test_chain_angles(chain):
    # K_n = n + 3: chi_n has angle 1 / 2^(2^(n+3))
    for l in chain.links:
        assert dict(l.character.angles) == {0: Fraction(1, 2 ** (2 ** (l.n + 3)))}
        assert l.fold_conj == 2 * l.fold_one


def test_chain_conditions(chain):
    gaps = [l.gap for l in chain.links]
    assert chord(chain.links[0].fold_one) < 0.25
    for prev, l in zip(chain.links, chain.links[1:]):
        assert chord(l.fold_one) < 4.0 ** -l.n * prev.gap
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_depth_one(chain):
    t = build_character_tree(chain, 1)
    assert t.pairs == 1 and t.separation(0, 1) == chain.links[0].gap


def test_depth_four_matrix(chain):
    t = build_character_tree(chain, 4)
    assert not t.violations
    rows = t.to_csv().strip().splitlines()
    assert len(rows) == 17 and all(len(r.split(",")) == 17 for r in rows)
    for p in range(1, 5):
        eps = 7 / 6 * chain.links[p - 1].gap * (1 + 1e-9)
        assert len(t.separated_family(eps)) <= 2**p


def test_jamison_sequence_has_no_chain():
    Z = GroupDescriptor(1, ())
    with pytest.raises(WitnessUnavailable):
        gap_chain_generate(SequenceSpec(Z, AllElements()), 2, q_max=40)
    with pytest.raises(WitnessUnavailable):
        gap_chain_generate(SequenceSpec(Z, Polynomial((1, 1))), 2, q_max=40)

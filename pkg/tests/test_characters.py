from __future__ import annotations

import cmath
import math
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from jamison.characters import (
    Character,
    certified_lt,
    char_eval,
    chord,
    chord_interval,
    d_j_bruteforce,
    d_j_product,
    d_metric,
    d_metric_certified,
    fold,
    pair_gap,
)
from jamison.groups import GroupDescriptor
from jamison.sequences import DoubleExponential, ExplicitList, Polynomial, SequenceSpec

F = Fraction


def test_evaluation(Z):
    assert char_eval(Character.of(Z, ["1/2"]), Z.element([2])) == 1
    assert char_eval(Character.trivial(Z), Z.element([17])) == 1
    w = char_eval(Character.of(Z, ["1/3"]), Z.element([1]))
    assert abs(w - complex(-0.5, math.sqrt(3) / 2)) < 1e-15


def test_pair_gap(Z):
    one = Character.trivial(Z)
    chi = Character.of(Z, ["1/3"])
    assert pair_gap(chi, chi, Z.element([5])) == 0
    assert abs(pair_gap(chi, one, Z.element([1])) - math.sqrt(3)) < 1e-15
    assert abs(pair_gap(chi, one, Z.element([1])) - abs(cmath.exp(2j * math.pi / 3) - 1)) < 1e-15
    assert pair_gap(Character.of(Z, ["1/2"]), one, Z.element([1])) == 2


def test_truncated_metric(Z):
    one = Character.trivial(Z)
    ints = SequenceSpec(Z, Polynomial((1, 1)))
    evens = SequenceSpec(Z, Polynomial((2, 2)))
    chi = Character.of(Z, ["1/3"])
    assert d_metric(chi, chi, ints, 10).value == 0
    assert abs(d_metric(chi, one, ints, 2).value - math.sqrt(3)) < 1e-15
    # not a metric on a non-generating sequence
    assert d_metric(Character.of(Z, ["1/2"]), one, evens, 50).value == 0


def test_certified_metric(Z):
    one = Character.trivial(Z)
    ints = SequenceSpec(Z, Polynomial((1, 1)))
    v = d_metric_certified(Character.of(Z, ["1/5"]), one, ints)
    assert v.certified and v.fold == F(2, 5)
    assert abs(v.value - 2 * math.sin(2 * math.pi / 5)) < 1e-15
    assert d_metric_certified(Character.of(Z, ["1/3"]), one, ints).fold == F(1, 3)
    dd = d_metric_certified(Character.of(Z, [F(1, 2**16)]), one, SequenceSpec(Z, DoubleExponential(2)))
    assert dd.fold == F(1, 256)
    assert abs(dd.value - 2 * math.sin(math.pi / 256)) < 1e-15


def test_interval_comparison_at_tiny_scales():
    a, b = F(1, 2**256), F(1, 2**256) + F(1, 2**300)
    assert certified_lt(chord_interval(a), chord_interval(b))
    assert not certified_lt(chord_interval(b), chord_interval(a))


def test_d_j_examples(Z):
    ints = SequenceSpec(Z, Polynomial((1, 1)))
    chi, phi = Character.of(Z, ["1/3"]), Character.of(Z, ["1/4"])
    assert abs(d_j_product(chi, phi, ints, 3, 0) - d_metric(chi, phi, ints, 3).value) < 1e-15
    assert abs(d_j_product(chi, phi, ints, 3, 1) - d_j_bruteforce(chi, phi, ints, 3, 1)) < 1e-12
    assert all(d_j_product(chi, chi, ints, 4, j) == 0 for j in range(4))


def test_torsion_characters():
    G = GroupDescriptor(1, (4,))
    chi = Character.of(G, ["1/2"], [1])
    x = G.from_flat([1, 1])
    assert chi.at(x) == F(3, 4)
    seq = SequenceSpec(G, ExplicitList((x, G.from_flat([0, 2]))))
    assert d_metric_certified(chi, Character.trivial(G), seq).fold == F(1, 2)


angles = st.fractions(min_value=0, max_value=1, max_denominator=60)


@given(angles, angles, angles)
def test_triangle_inequality_exact(a, b, c):
    Z = GroupDescriptor(1, ())
    seq = SequenceSpec(Z, Polynomial((1, 1)))
    x, y, z = (Character.of(Z, [t]) for t in (a, b, c))
    dxy = d_metric_certified(x, y, seq).value
    dyz = d_metric_certified(y, z, seq).value
    dxz = d_metric_certified(x, z, seq).value
    assert dxz <= dxy + dyz + 1e-12
    assert abs(dxy - d_metric_certified(y, x, seq).value) < 1e-15


@given(st.fractions(min_value=-3, max_value=3, max_denominator=1000))
def test_fold_range(a):
    f = fold(a)
    assert 0 <= f <= F(1, 2)
    assert (a - f).denominator == 1 or (a + f).denominator == 1
    assert 0 <= chord(f) <= 2


@given(angles, angles)
def test_group_laws(a, b):
    Z = GroupDescriptor(1, ())
    x, y = Character.of(Z, [a]), Character.of(Z, [b])
    assert (x * y) / y == x
    assert (x * x.conj()).is_trivial()
    assert x**3 == x * x * x

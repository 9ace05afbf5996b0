"""Characters of Z^l x prod Z/a_i (and Z^oo) and the separation pseudo-metric.

A character is stored by its angles: ``chi(g) = exp(2 pi i <angle, g>)``.
Exact characters use Fractions, so every value chi(g) is an exact root of
unity and every gap |chi(g) - phi(g)| = 2 |sin(pi * fold)| is determined by
an exact fold in [0, 1/2]. Chords are only turned into floats at the end,
or into mpmath intervals when a comparison has to be certified.
"""

from __future__ import annotations

import cmath
import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

from mpmath import iv

from .errors import BudgetExceeded, NotCertifiable, ValidationError
from .groups import GroupDescriptor, GroupElement
from .sequences import AllElements, SequenceSpec, residue_orbit

Angle = Union[Fraction, float]
CERT_PREC = 320  # bits for interval comparisons; folds go down to 2^-256 in the tree tests


@contextmanager
def _ivprec():
    old = iv.prec
    iv.prec = CERT_PREC
    try:
        yield
    finally:
        iv.prec = old


def _as_angle(x) -> Angle:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"angle {x} is not finite")
        return x % 1.0
    if isinstance(x, str):
        x = Fraction(x)
    return Fraction(x) % 1


def fold(a: Angle) -> Angle:
    """Distance from ``a`` to the nearest integer."""
    a = a % 1
    return min(a, 1 - a)


def chord(f: Angle) -> float:
    """``2 |sin(pi f)|``; accurate for tiny folds since sin is evaluated near 0."""
    return 2.0 * abs(math.sin(math.pi * float(fold(f))))


def chord_interval(f: Angle):
    """Rigorous enclosure of ``2 sin(pi * fold(f))`` as an mpmath interval."""
    f = fold(f)
    with _ivprec():
        if isinstance(f, Fraction):
            x = iv.mpf(f.numerator) / iv.mpf(f.denominator)
        else:
            x = iv.mpf(f)
        return 2 * iv.sin(iv.pi * x)


def certified_lt(a, b) -> bool:
    """``a < b`` proven for interval (or exact) operands."""
    with _ivprec():
        return bool(iv.mpf(a).b < iv.mpf(b).a)


def certified_le(a, b) -> bool:
    with _ivprec():
        return bool(iv.mpf(a).b <= iv.mpf(b).a)


@dataclass(frozen=True)
class Character:
    """Point of the dual group.

    ``angles`` holds the nonzero free-coordinate angles as sorted pairs;
    ``torsion`` holds residues t_i, meaning angle t_i / a_i on slot i.
    """

    ambient: GroupDescriptor
    angles: tuple[tuple[int, Angle], ...] = ()
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        G = self.ambient
        clean = {}
        for i, a in self.angles:
            i = int(i)
            if i < 0 or (not G.countable and i >= G.rank):
                raise ValidationError(f"character coordinate {i} outside {G.label()}")
            a = _as_angle(a)
            if a:
                clean[i] = a
        object.__setattr__(self, "angles", tuple(sorted(clean.items())))
        tors = tuple(self.torsion) or (0,) * len(G.torsion_orders)
        if len(tors) != len(G.torsion_orders):
            raise ValidationError("torsion angle count does not match the group")
        object.__setattr__(self, "torsion", tuple(int(t) % a for t, a in zip(tors, G.torsion_orders)))

    # ------------------------------------------------------------ builders

    @classmethod
    def trivial(cls, G: GroupDescriptor) -> Character:
        return cls(G)

    @classmethod
    def of(cls, G: GroupDescriptor, angles: Sequence | Mapping = (), torsion: Sequence[int] = ()) -> Character:
        """Angles given densely (list) or by coordinate (mapping); strings like '1/3' allowed."""
        items = angles.items() if isinstance(angles, Mapping) else enumerate(angles)
        return cls(G, tuple((int(i), _as_angle(a)) for i, a in items), tuple(torsion))

    @classmethod
    def from_angle_vector(cls, G: GroupDescriptor, frame: Sequence[int], vec: Sequence[Angle]) -> Character:
        """Angles over ``frame`` coordinates followed by one angle per torsion slot."""
        n = len(frame)
        tors = []
        for a, m in zip(vec[n:], G.torsion_orders):
            t = Fraction(a) * m
            if t.denominator != 1:
                raise ValidationError(f"torsion angle {a} is not a multiple of 1/{m}")
            tors.append(int(t))
        return cls(G, tuple(zip(frame, vec[:n])), tuple(tors))

    # ---------------------------------------------------------- properties

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Fraction) for _, a in self.angles)

    def angle(self, i: int) -> Angle:
        for j, a in self.angles:
            if j == i:
                return a
        return Fraction(0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.angles)

    def is_trivial(self) -> bool:
        return not self.angles and not any(self.torsion)

    @property
    def denominator(self) -> int:
        """Order of the character (lcm of angle denominators); exact characters only."""
        if not self.exact:
            raise NotCertifiable("float character has no denominator")
        dens = [a.denominator for _, a in self.angles]
        dens += [m // math.gcd(t, m) for t, m in zip(self.torsion, self.ambient.torsion_orders)]
        return reduce(math.lcm, dens, 1)

    # ------------------------------------------------------------- algebra

    def __mul__(self, other: Character) -> Character:
        acc: dict[int, Angle] = dict(self.angles)
        for i, a in other.angles:
            acc[i] = acc.get(i, Fraction(0)) + a
        tors = tuple(s + t for s, t in zip(self.torsion, other.torsion))
        return Character(self.ambient, tuple(acc.items()), tors)

    def conj(self) -> Character:
        return Character(self.ambient, tuple((i, -a) for i, a in self.angles), tuple(-t for t in self.torsion))

    def __truediv__(self, other: Character) -> Character:
        return self * other.conj()

    def __pow__(self, n: int) -> Character:
        return Character(self.ambient, tuple((i, a * n) for i, a in self.angles), tuple(t * n for t in self.torsion))

    def close_to(self, other: Character, tol: float = 1e-12) -> bool:
        """Equality for float characters (never used on certified paths)."""
        d = self / other
        return all(float(fold(a)) <= tol for _, a in d.angles) and not any(d.torsion)

    def at(self, g: GroupElement) -> Angle:
        """Angle of ``chi(g)`` in [0, 1): exact Fraction when the character is exact."""
        acc: Angle = Fraction(0)
        exact = True
        for i, v in g.free:
            a = self.angle(i)
            if isinstance(a, float):
                exact = False
                a = Fraction(a)  # exact binary value; rounding happens once, at the end
            acc += a * v
        for t, r, m in zip(self.torsion, g.torsion, self.ambient.torsion_orders):
            acc += Fraction(t * r, m)
        acc %= 1
        return acc if exact else float(acc) % 1.0

    def to_triples(self) -> list:
        """Report form: (coordinate, p, q) for exact angles, (coordinate, x) for floats."""
        out = []
        for i, a in self.angles:
            out.append([i, a.numerator, a.denominator] if isinstance(a, Fraction) else [i, a])
        return out

    def __repr__(self):
        ang = ", ".join(f"{i}:{a}" for i, a in self.angles)
        tors = f" | {list(self.torsion)}" if any(self.torsion) else ""
        return f"chi<{ang or '1'}{tors}>"


# ----------------------------------------------------------- evaluation


def char_angle(chi: Character, g: GroupElement) -> Angle:
    return chi.at(g)


def char_eval(chi: Character, g: GroupElement) -> complex:
    a = chi.at(g)
    if isinstance(a, Fraction):
        # exact quarter turns give exact values
        table = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
        if a in table:
            return table[a]
    return cmath.exp(2j * math.pi * float(a))


def unit_minus_one(a: Angle) -> complex:
    """``exp(2 pi i a) - 1`` computed as ``2i sin(pi t) exp(i pi t)`` with t folded to (-1/2, 1/2]."""
    t = float(a % 1)
    if t > 0.5:
        t -= 1.0
    return 2j * math.sin(math.pi * t) * cmath.exp(1j * math.pi * t)


def pair_fold(chi: Character, phi: Character, g: GroupElement) -> Angle:
    return fold((chi / phi).at(g))


def pair_gap(chi: Character, phi: Character, g: GroupElement) -> float:
    return chord(pair_fold(chi, phi, g))


# --------------------------------------------------------------- metric


@dataclass(frozen=True, order=True)
class MetricValue:
    value: float
    certified: bool = False
    K_used: int | None = None
    fold: Angle | None = None  # exact fold attaining the sup, when known
    argmax: int | None = None  # index k (truncated mode) of the first maximizing term

    def __post_init__(self):
        if not (0.0 <= self.value <= 2.0 + 1e-15):
            raise ValueError(f"metric value {self.value} outside [0, 2]")

    def interval(self):
        if self.fold is None:
            raise NotCertifiable("no exact fold recorded")
        return chord_interval(self.fold)


def d_metric(chi: Character, phi: Character, seq: SequenceSpec, K: int) -> MetricValue:
    """``max_{k<K} |chi(g_k) - phi(g_k)|`` (truncated, never certified)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    psi = chi / phi
    best, arg = Fraction(0) if psi.exact else 0.0, 0
    for k, g in enumerate(seq.terms(K)):
        f = fold(psi.at(g))
        if f > best:
            best, arg = f, k
    return MetricValue(chord(best), False, K, best, arg)


def d_metric_certified(chi: Character, phi: Character, seq: SequenceSpec, max_steps: int = 10**6) -> MetricValue:
    """Exact ``sup_{k>=0} |chi(g_k) - phi(g_k)|`` from the residue orbit mod the order of chi/phi."""
    psi = chi / phi
    if not psi.exact:
        raise NotCertifiable("certified metric needs exact characters")
    best = certified_max_fold(psi, seq, max_steps)
    return MetricValue(chord(best), True, None, best)


def certified_max_fold(psi: Character, seq: SequenceSpec, max_steps: int = 10**6) -> Fraction:
    if psi.is_trivial():
        return Fraction(0)
    q = psi.denominator
    if isinstance(seq.body, AllElements):
        # psi(G) is the cyclic group of order q, so some term sits at floor(q/2)/q.
        return Fraction(q // 2, q)
    G = seq.ambient
    coords = psi.support if G.countable else tuple(range(G.rank))
    orbit = residue_orbit(seq, q, coords, max_steps)
    weights = [int(psi.angle(i) * q) for i in coords]
    weights += [int(Fraction(t, m) * q) for t, m in zip(psi.torsion, G.torsion_orders)]
    best = 0
    for r in orbit.residues:
        n = sum(w * x for w, x in zip(weights, r)) % q
        best = max(best, min(n, q - n))
    return Fraction(best, q)


# ---------------------------------------------------------- product metric


def _factor_values(chi: Character, phi: Character, seq: SequenceSpec, K: int) -> list[tuple[complex, complex]]:
    seen, out = set(), []
    for g in seq.terms(K):
        a, b = chi.at(g), phi.at(g)
        if (a, b) not in seen:
            seen.add((a, b))
            out.append((unit_minus_one(a), unit_minus_one(b)))
    return out


def d_j_product(chi: Character, phi: Character, seq: SequenceSpec, K: int, j: int, budget: int = 10**6) -> float:
    """``sup |prod (chi(g_ki) - 1) - prod (phi(g_ki) - 1)|`` over (j+1)-tuples from the first K terms.

    The products only depend on the multiset of distinct factor values, so
    we walk multisets over the distinct (chi(g)-1, phi(g)-1) pairs.
    """
    if j < 0 or K < 1:
        raise ValueError("need j >= 0 and K >= 1")
    vals = _factor_values(chi, phi, seq, K)
    n = len(vals)
    if math.comb(n + j, j + 1) > budget:
        raise BudgetExceeded(f"{math.comb(n + j, j + 1)} multisets exceed budget {budget}")
    best = 0.0

    def walk(start: int, depth: int, pa: complex, pb: complex):
        nonlocal best
        if depth == j + 1:
            best = max(best, abs(pa - pb))
            return
        for i in range(start, n):
            a, b = vals[i]
            walk(i, depth + 1, pa * a, pb * b)

    walk(0, 0, 1 + 0j, 1 + 0j)
    return best


def d_j_bruteforce(chi: Character, phi: Character, seq: SequenceSpec, K: int, j: int) -> float:
    """Reference enumeration over all K^(j+1) index tuples (tests only)."""
    import itertools

    terms = seq.terms(K)
    best = 0.0
    for tup in itertools.product(terms, repeat=j + 1):
        pa = pb = 1 + 0j
        for g in tup:
            pa *= char_eval(chi, g) - 1
            pb *= char_eval(phi, g) - 1
        best = max(best, abs(pa - pb))
    return best


def characters_from(G: GroupDescriptor, specs: Iterable) -> list[Character]:
    return [s if isinstance(s, Character) else Character.of(G, s) for s in specs]

"""Renorming ||.||_*, eigencharacter separation and the continuity probe.

Characters are eigenvectors of every translation: rho(g) chi = chi(g) chi.
So a finite character combination f = sum c_i chi_i stays a combination
under every product of (rho(g_k) - Id), and all the norms involved reduce
to Gram matrices of characters in l^2(G, w), bounded from the weight table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .characters import (
    Character,
    certified_le,
    certified_max_fold,
    chord,
    chord_interval,
    d_j_product,
    d_metric,
    fold,
    unit_minus_one,
)
from .errors import BudgetExceeded, NotCertifiable
from .groups import GeneratorLattice, GroupElement, express_in_generators, lattice_of
from .sequences import SequenceSpec
from .weights import WeightTable


@dataclass(frozen=True)
class CharacterCombination:
    terms: tuple[tuple[complex, Character], ...]

    @classmethod
    def of(cls, pairs) -> CharacterCombination:
        return cls(tuple((complex(c), chi) for c, chi in pairs))

    @property
    def characters(self) -> list[Character]:
        return [chi for _, chi in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    def translate(self, g: GroupElement) -> CharacterCombination:
        """rho(g) f = sum c_i chi_i(g) chi_i."""
        return CharacterCombination(tuple((c * np.exp(2j * math.pi * float(chi.at(g))), chi) for c, chi in self.terms))

    def __call__(self, x: GroupElement) -> complex:
        return sum(c * np.exp(2j * math.pi * float(chi.at(x))) for c, chi in self.terms)


class GramModel:
    """Interval model of ``<chi_i, chi_l>`` in l^2(G, w) from a weight table.

    For h = sum b_i chi_i: sum_box |h|^2 lower(x) <= ||h||^2 <= that + (sum|b_i|)^2 (1 - sum_box lower(x)),
    since the full weight has total mass exactly 1.
    """

    def __init__(self, wt: WeightTable, chars: Sequence[Character]):
        xs = list(wt.elements())
        lo = np.array([float(wt.lower(x)) for x in xs])
        self.missing = max(0.0, 1.0 - math.fsum(lo)) + 1e-15
        E = np.array([[np.exp(2j * math.pi * float(chi.at(x))) for x in xs] for chi in chars])
        self.gram = (E * lo) @ E.conj().T

    def norm_bounds(self, b: np.ndarray) -> tuple[float, float]:
        q = float(np.real(b.conj() @ self.gram.T @ b))
        q = max(q, 0.0)
        s = float(np.sum(np.abs(b)))
        lo = max(0.0, q * (1 - 1e-12))
        hi = q * (1 + 1e-12) + s * s * self.missing
        return math.sqrt(lo), math.sqrt(hi)


@dataclass
class StarNorm:
    lower: float
    upper: float
    exact: bool
    norm: tuple[float, float] = (0.0, 0.0)
    closure: tuple[float, float] = (0.0, 0.0)  # truncated sup over enumerated tuples, (low, high)
    tuples: int = 0
    note: str = ""


def _tuple_values(chars: Sequence[Character], terms: Sequence[GroupElement]) -> list[np.ndarray]:
    seen, out = set(), []
    for g in terms:
        key = tuple(chi.at(g) for chi in chars)
        if key not in seen:
            seen.add(key)
            out.append(np.array([unit_minus_one(a) for a in key]))
    return out


def _closure(f: CharacterCombination, gram: GramModel, terms: Sequence[GroupElement], J: int, budget: int, rng) -> tuple[float, float, int]:
    """max over j <= J and (j+1)-multisets of 2^(-j-1) ||prod (rho(g) - Id) f||, as (low, high)."""
    vals = _tuple_values(f.characters, terms)
    c = f.coefficients
    n = len(vals)
    total = sum(math.comb(n + j, j + 1) for j in range(J + 1))
    lo = hi = 0.0
    count = 0

    def visit(prod: np.ndarray, j: int):
        nonlocal lo, hi, count
        a, b = gram.norm_bounds(c * prod)
        lo = max(lo, 2.0 ** (-j - 1) * a)
        hi = max(hi, 2.0 ** (-j - 1) * b)
        count += 1

    if total <= budget:
        for j in range(J + 1):
            for combo in itertools.combinations_with_replacement(range(n), j + 1):
                visit(np.prod([vals[i] for i in combo], axis=0), j)
    else:
        if rng is None:
            raise BudgetExceeded(f"{total} tuples exceed budget {budget} and no sampler was given")
        for _ in range(budget):
            j = int(rng.integers(0, J + 1))
            combo = rng.integers(0, n, size=j + 1)
            visit(np.prod([vals[i] for i in combo], axis=0), j)
    return lo, hi, count


def star_norm(
    f: Character | CharacterCombination,
    seq: SequenceSpec,
    K: int,
    J: int,
    wt: WeightTable | None = None,
    budget: int = 20_000,
    rng=None,
) -> StarNorm:
    """Bounds for ||f||_* = max(||f||, sup_j 2^(-j-1) sup ||prod_i (rho(g_ki) - Id) f||).

    A single character has ||chi|| = 1 (the weight sums to 1) and every
    level term equals (D/2)^(j+1) with D = d(chi, 1) <= 2, so ||chi||_* = ||chi||
    exactly. For combinations the lower bound is the closure over tuples
    from the first K terms up to level J; the upper bound is
    max(||f||_up, sum |c_i| D_i / 2), valid for every level.
    """
    if isinstance(f, Character):
        f = CharacterCombination(((1 + 0j, f),))
    terms_nz = [(c, chi) for c, chi in f.terms if c != 0]
    if not terms_nz:
        return StarNorm(0.0, 0.0, True, note="zero vector")
    f = CharacterCombination(tuple(terms_nz))
    if len(f.terms) == 1:
        c, chi = f.terms[0]
        # (D/2)^(j+1) <= 1 because D <= 2: the star norm is the l^2 norm, |c| * 1.
        return StarNorm(abs(c), abs(c), True, (abs(c), abs(c)), note="single character: ||chi||_* = ||chi|| = 1")
    if wt is None:
        raise NotCertifiable("combinations need a weight table")
    gram = GramModel(wt, f.characters)
    nlo, nhi = gram.norm_bounds(f.coefficients)
    clo, chi_, count = _closure(f, gram, seq.terms(K), J, budget, rng)
    comp = 0.0
    for c, ch in f.terms:
        try:
            D = chord(certified_max_fold(ch, seq))
        except (NotCertifiable, BudgetExceeded):
            D = 2.0
        comp += abs(c) * D / 2
    return StarNorm(max(nlo, clo), max(nhi, comp), False, (nlo, nhi), (clo, chi_), count)


@dataclass
class TranslationStarCheck:
    p: int
    lhs_upper: float  # truncated ||rho(g_p) f||_* from above
    rhs_lower: float  # ||f||_* truncated one level deeper, from below
    ratio: float
    holds: bool
    slack: float


def translation_star_check(
    f: Character | CharacterCombination, seq: SequenceSpec, p: int, K: int, J: int, wt: WeightTable | None = None, budget: int = 20_000
) -> TranslationStarCheck:
    """Check ||rho(g_p) f||_* <= 3 ||f||_* on consistent truncations.

    Level j of rho(g_p) f is bounded by levels j and j+1 of f over tuples
    that may also use g_p, so the left side uses levels <= J over the first
    K terms and the right side levels <= J+1 over those terms plus g_p.
    """
    if isinstance(f, Character):
        f = CharacterCombination(((1 + 0j, f),))
    gp = seq.term(p)
    if len(f.terms) == 1:
        # |chi(g_p)| = 1: both sides are the same exact number.
        v = abs(f.terms[0][0])
        return TranslationStarCheck(p, v, v, 1.0 if v else 0.0, True, 3 * v - v)
    g = f.translate(gp)
    gram = GramModel(wt, f.characters)
    terms = seq.terms(K)
    _, lhs_c, _ = _closure(g, gram, terms, J, budget, None)
    lhs = max(gram.norm_bounds(g.coefficients)[1], lhs_c)
    rhs_c, _, _ = _closure(f, gram, terms + [gp], J + 1, budget * 4, None)
    rhs = max(gram.norm_bounds(f.coefficients)[0], rhs_c)
    return TranslationStarCheck(p, lhs, rhs, lhs / rhs if rhs else math.inf, lhs <= 3 * rhs, 3 * rhs - lhs)


# ------------------------------------------------------------ eigenvectors


@dataclass
class EigenSeparation:
    bound: float  # d(chi, phi) / (M + 1)
    d: float
    M: float
    certified_d: bool
    measured: tuple[float, float] | None = None  # ||e_chi - e_phi|| bounds in the translation model
    chain: list[dict] = field(default_factory=list)
    holds: bool = True


def eigencharacter_separation(
    chi: Character, phi: Character, seq: SequenceSpec, M: float, K: int = 64, wt: WeightTable | None = None
) -> EigenSeparation:
    """||e_chi - e_phi|| >= d(chi, phi) / (M + 1) and, with a weight table, its verification.

    e_chi = chi / ||chi|| = chi since ||chi|| = 1. For each k the chain
    |chi(g_k) - phi(g_k)| - ||e|| <= ||rho(g_k) e|| <= M ||e|| is checked
    with unfavorable interval endpoints.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    try:
        d = chord(certified_max_fold(chi / phi, seq))
        cert = True
    except (NotCertifiable, BudgetExceeded):
        d = d_metric(chi, phi, seq, K).value
        cert = False
    out = EigenSeparation(d / (M + 1), d, M, cert)
    if wt is None or chi == phi:
        return out
    f = CharacterCombination(((1 + 0j, chi), (-1 + 0j, phi)))
    gram = GramModel(wt, f.characters)
    e_lo, e_hi = gram.norm_bounds(f.coefficients)
    out.measured = (e_lo, e_hi)
    ok = e_lo >= out.bound
    for k, g in enumerate(seq.terms(K)):
        gap = chord(fold((chi / phi).at(g)))
        r_lo, r_hi = gram.norm_bounds(f.translate(g).coefficients)
        first = gap - e_hi <= r_hi + 1e-12
        second = r_lo <= M * e_hi + 1e-12
        out.chain.append({"k": k, "gap": gap, "rho_e": (r_lo, r_hi), "triangle": first, "bounded": second})
        ok = ok and first and second
    out.holds = ok
    return out


# ------------------------------------------------------------ fixed points


@dataclass
class FixedPointCheck:
    passed: bool
    checked: int
    failures: list[GroupElement]


def annihilator_fixed_point_check(
    lat: GeneratorLattice, chi: Character, seq: SequenceSpec | None = None, K: int = 64, extra: Sequence[GroupElement] = ()
) -> FixedPointCheck:
    """chi(g) = 1 exactly for the lattice generators, the first K sequence terms and ``extra``."""
    pts = list(lat.generators) + (seq.terms(K) if seq is not None else []) + list(extra)
    bad = [g for g in pts if chi.at(g) != 0]
    return FixedPointCheck(not bad, len(pts), bad)


# -------------------------------------------------------------- continuity


@dataclass
class ContinuityReport:
    d0: float
    levels: list[dict]  # j, d_j, 2^(-j-1) d_j, recursion slack, induction slack
    coefficient_checks: list[dict]
    empirical_sup: float
    holds: bool
    tolerance: float


def continuity_probe(
    chi: Character,
    phi: Character,
    seq: SequenceSpec,
    K: int,
    J: int,
    cases: Sequence[GroupElement] = (),
    tol: float = 1e-12,
    budget: int = 10**6,
) -> ContinuityReport:
    """Per-level product metrics d_j and the word-length bound for h in ``cases``.

    Checks d_j <= 2^j d_0 + 2 d_(j-1) and d_j <= (j+1) 2^j d_0 (float products,
    tolerance ``tol``), and |chi(h) - phi(h)| <= (sum |alpha_k|) d_0 with
    alpha the minimal-l1 expression of h in the first K terms.
    """
    d = [d_j_product(chi, phi, seq, K, j, budget) for j in range(J + 1)]
    d0 = d[0]
    levels, ok = [], True
    for j, dj in enumerate(d):
        rec = (2**j * d0 + 2 * d[j - 1] - dj) if j else 0.0
        ind = (j + 1) * 2**j * d0 - dj
        levels.append({"j": j, "d_j": dj, "term": 2.0 ** (-j - 1) * dj, "recursion_slack": rec, "induction_slack": ind})
        ok = ok and rec >= -tol and ind >= -tol
    checks = []
    if cases:
        terms = seq.terms(K)
        lat = lattice_of(terms, seq.ambient)
        psi = chi / phi
        f0 = max(fold(psi.at(g)) for g in terms)
        for h in cases:
            alpha = express_in_generators(h, lat)
            L1 = sum(abs(a) for a in alpha)
            fh = fold(psi.at(h))
            if psi.exact:
                # chord is increasing in the fold, so equal folds need no intervals
                good = (L1 >= 1 and fh <= f0) or certified_le(chord_interval(fh), L1 * chord_interval(f0))
            else:
                good = chord(fh) <= L1 * chord(f0) + tol
            checks.append({"h": h, "alpha": alpha, "l1": L1, "gap": chord(fh), "bound": L1 * chord(f0), "holds": good})
            ok = ok and good
    return ContinuityReport(d0, levels, checks, max(l["term"] for l in levels), ok, tol)

"""Binary trees of characters built from a chain with fast-shrinking gaps.

Given chi_1, chi_2, ... with d(chi_1, 1) < 1/4 and
d(chi_n, 1) < 4^-n d(chi_(n-1), conj chi_(n-1)), the products
chi_1^(+-1) ... chi_p^(+-1) form a tree whose leaves are separated by
at least 5/6 of the gap at the first index where their signs differ.
Everything here uses exact angles and interval comparisons.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import iv

from .characters import Character, _ivprec, certified_le, certified_lt, certified_max_fold, chord, chord_interval
from .criterion import augment_to_generating, generated_lattice, witness_search
from .errors import BudgetExceeded, WitnessUnavailable
from .groups import subgroup_index
from .sequences import SequenceSpec


@dataclass
class ChainLink:
    n: int
    character: Character
    fold_one: Fraction  # d(chi_n, 1) = chord(fold_one)
    fold_conj: Fraction  # d(chi_n, conj chi_n) = chord(fold_conj)
    target: float  # the strict upper bound d(chi_n, 1) had to beat

    @property
    def gap(self) -> float:
        return chord(self.fold_conj)


@dataclass
class GapChain:
    sequence: SequenceSpec  # the generating sequence the metric is taken on
    links: list[ChainLink]
    checks: list[str] = field(default_factory=list)

    @property
    def characters(self) -> list[Character]:
        return [l.character for l in self.links]


def _float_below(x) -> float:
    """A float not exceeding the interval ``x``."""
    with _ivprec():
        v = float(x.a)
        return v if iv.mpf(v) <= x else float(x.a) * (1 - 2**-50)


def gap_chain_generate(seq: SequenceSpec, depth: int, K: int = 64, **search) -> GapChain:
    """A certified chain chi_1..chi_depth for the tree construction.

    A sequence that does not span the group is first augmented by coset
    representatives, so that d is a metric. Each chi_n is the first witness
    (in search order) below its target; the target and both defining
    inequalities are rechecked with intervals. Raises WitnessUnavailable
    when the search comes back empty.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if subgroup_index(generated_lattice(seq, K)) != 1:
        seq = augment_to_generating(seq, K)
    links: list[ChainLink] = []
    checks: list[str] = []
    with _ivprec():
        target_iv = iv.mpf(1) / 4
    for n in range(1, depth + 1):
        eps = _float_below(target_iv)
        try:
            rep = witness_search(seq, eps, K=K, **search)
        except BudgetExceeded as e:
            raise WitnessUnavailable(f"chain step {n}: {e}") from e
        if rep is None or not rep.certified:
            raise WitnessUnavailable(f"chain step {n}: no certified character with d(chi, 1) < {eps:.3e}")
        chi = rep.witness
        f1 = certified_max_fold(chi, seq)
        fc = certified_max_fold(chi * chi, seq)  # chi / conj(chi) = chi^2
        if not certified_lt(chord_interval(f1), target_iv):
            raise WitnessUnavailable(f"chain step {n}: interval check of d(chi_{n}, 1) failed")
        if fc == 0:
            raise WitnessUnavailable(f"chain step {n}: chi_{n} is real, so it equals its conjugate on the sequence")
        checks.append(f"d(chi_{n},1) = {chord(f1):.6e} < {float(target_iv.b):.6e}; d(chi_{n},conj) = {chord(fc):.6e} > 0")
        links.append(ChainLink(n, chi, f1, fc, eps))
        with _ivprec():
            target_iv = chord_interval(fc) / iv.mpf(4) ** (n + 1)
    return GapChain(seq, links, checks)


@dataclass
class CharacterTree:
    chain: GapChain
    depth: int
    leaves: list[tuple[tuple[int, ...], Character]]  # sign pattern (0 = chi_n, 1 = conj) and product
    folds: dict[tuple[int, int], Fraction]
    violations: list[str]

    @property
    def pairs(self) -> int:
        return len(self.folds)

    def separation(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return chord(self.folds[(min(i, j), max(i, j))])

    def matrix(self) -> list[list[float]]:
        n = len(self.leaves)
        return [[self.separation(i, j) for j in range(n)] for i in range(n)]

    def min_separation(self) -> float:
        return min(chord(f) for f in self.folds.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = ["".join(map(str, s)) for s, _ in self.leaves]
        w.writerow(["leaf"] + labels)
        for i, row in enumerate(self.matrix()):
            w.writerow([labels[i]] + [repr(x) for x in row])
        return buf.getvalue()

    def metric(self, a: Character, b: Character) -> float:
        return chord(certified_max_fold(a / b, self.chain.sequence))

    def separated_family(self, eps: float) -> list[Character]:
        """Greedy eps-separated subfamily of the leaves, in leaf order."""
        idx: list[int] = []
        for i in range(len(self.leaves)):
            if all(self.separation(i, j) >= eps for j in idx):
                idx.append(i)
        return [self.leaves[i][1] for i in idx]


def _first_difference(s: tuple[int, ...], t: tuple[int, ...]) -> int:
    return next(i for i, (a, b) in enumerate(zip(s, t)) if a != b) + 1


def build_character_tree(chain: GapChain, depth: int | None = None) -> CharacterTree:
    """All 2^depth products and the exact pairwise separations.

    For leaves whose signs first differ at index q the separation must be
    at least 5/6 d(chi_q, conj chi_q) and, by the same estimate, at most
    7/6 of it; for every r < q (the leaves agree through r) it must be at most
    7/6 d(chi_r, conj chi_r). All checks use intervals.
    """
    p = depth or len(chain.links)
    if p > len(chain.links):
        raise ValueError(f"chain has only {len(chain.links)} links")
    seq = chain.sequence
    chis = chain.characters[:p]
    leaves = []
    for signs in itertools.product((0, 1), repeat=p):
        prod = Character.trivial(seq.ambient)
        for s, c in zip(signs, chis):
            prod = prod * (c.conj() if s else c)
        leaves.append((signs, prod))
    gaps = [chord_interval(l.fold_conj) for l in chain.links[:p]]
    folds: dict[tuple[int, int], Fraction] = {}
    bad: list[str] = []
    with _ivprec():
        lo_factor, hi_factor = iv.mpf(5) / 6, iv.mpf(7) / 6
    for i, j in itertools.combinations(range(len(leaves)), 2):
        (s, a), (t, b) = leaves[i], leaves[j]
        f = certified_max_fold(a / b, seq)
        folds[(i, j)] = f
        d = chord_interval(f)
        q = _first_difference(s, t)
        with _ivprec():
            if not certified_le(lo_factor * gaps[q - 1], d):
                bad.append(f"leaves {i},{j}: separation below 5/6 of gap {q}")
            if not certified_le(d, iv.mpf(2)):
                bad.append(f"leaves {i},{j}: separation above 2")
            for r in range(1, q + 1):
                if not certified_le(d, hi_factor * gaps[r - 1]):
                    bad.append(f"leaves {i},{j}: separation above 7/6 of gap {r}")
    return CharacterTree(chain, p, leaves, folds, bad)

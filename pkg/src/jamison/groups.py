"""Exact arithmetic in Z^l x Z/a_1 x ... x Z/a_r and in Z^oo.

Elements are immutable: a sparse map of free coordinates plus a tuple of
torsion residues. Subgroups are given by generator lists; every structural
question (index, cosets, membership, annihilator) is answered from one
Smith normal form of the generator matrix stacked on the torsion relations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded, InfiniteIndex, NotInSubgroup, ValidationError
from .snf import SnfDecomposition, smith_normal_form

COUNTABLE = "countable"
INFINITE = math.inf


@dataclass(frozen=True)
class GroupDescriptor:
    free_rank: int | str = 1
    torsion_orders: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion_orders", tuple(int(a) for a in self.torsion_orders))
        if self.free_rank == COUNTABLE:
            if self.torsion_orders:
                raise ValidationError("Z^oo is supported only as a pure free group", "torsion_orders")
        elif not isinstance(self.free_rank, int) or isinstance(self.free_rank, bool) or self.free_rank < 0:
            raise ValidationError(f"free rank must be a nonnegative integer or {COUNTABLE!r}", "free_rank")
        for a in self.torsion_orders:
            if a < 2:
                raise ValidationError(f"torsion order {a} < 2", "torsion_orders")

    @property
    def countable(self) -> bool:
        return self.free_rank == COUNTABLE

    @property
    def rank(self) -> int:
        """Free rank of a finitely generated group."""
        if self.countable:
            raise ValueError("Z^oo has no finite rank")
        return self.free_rank  # type: ignore[return-value]

    @property
    def is_finite(self) -> bool:
        return not self.countable and self.free_rank == 0

    @property
    def identity(self) -> GroupElement:
        return GroupElement((), (0,) * len(self.torsion_orders), self.torsion_orders)

    def element(self, free: Sequence[int] | Mapping[int, int] = (), torsion: Sequence[int] | None = None) -> GroupElement:
        """Build an element from a dense list (or index map) of free coordinates."""
        items = free.items() if isinstance(free, Mapping) else enumerate(free)
        pairs = []
        for i, v in items:
            i, v = int(i), int(v)
            if i < 0 or (not self.countable and i >= self.free_rank):
                raise ValidationError(f"free coordinate {i} outside {self.label()}")
            if v:
                pairs.append((i, v))
        torsion = tuple(torsion) if torsion is not None else (0,) * len(self.torsion_orders)
        if len(torsion) != len(self.torsion_orders):
            raise ValidationError(f"expected {len(self.torsion_orders)} torsion residues, got {len(torsion)}")
        return GroupElement(
            tuple(sorted(pairs)),
            tuple(int(t) % a for t, a in zip(torsion, self.torsion_orders)),
            self.torsion_orders,
        )

    def from_flat(self, values: Sequence[int]) -> GroupElement:
        """Dense ``[free..., torsion...]`` list (free part only for Z^oo)."""
        if self.countable:
            return self.element(values)
        l = self.free_rank
        if len(values) != l + len(self.torsion_orders):
            raise ValidationError(f"element {list(values)} has wrong length for {self.label()}")
        return self.element(values[:l], values[l:])

    def basis(self, i: int) -> GroupElement:
        return self.element({i: 1})

    def label(self) -> str:
        if self.countable:
            return "Z^oo"
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank:
            parts.append(f"Z^{self.free_rank}")
        parts += [f"Z/{a}" for a in self.torsion_orders]
        return " x ".join(parts) or "0"


@dataclass(frozen=True)
class GroupElement:
    free: tuple[tuple[int, int], ...]
    torsion: tuple[int, ...] = ()
    moduli: tuple[int, ...] = field(default=(), compare=False)

    def __add__(self, other: GroupElement) -> GroupElement:
        acc = dict(self.free)
        for i, v in other.free:
            acc[i] = acc.get(i, 0) + v
        free = tuple(sorted((i, v) for i, v in acc.items() if v))
        tors = tuple((a + b) % m for a, b, m in zip(self.torsion, other.torsion, self.moduli))
        return GroupElement(free, tors, self.moduli)

    def __neg__(self) -> GroupElement:
        return GroupElement(
            tuple((i, -v) for i, v in self.free),
            tuple((-t) % m for t, m in zip(self.torsion, self.moduli)),
            self.moduli,
        )

    def __sub__(self, other: GroupElement) -> GroupElement:
        return self + (-other)

    def __mul__(self, n: int) -> GroupElement:
        n = int(n)
        if n == 0:
            return GroupElement((), (0,) * len(self.torsion), self.moduli)
        return GroupElement(
            tuple((i, v * n) for i, v in self.free),
            tuple((t * n) % m for t, m in zip(self.torsion, self.moduli)),
            self.moduli,
        )

    __rmul__ = __mul__

    def coord(self, i: int) -> int:
        for j, v in self.free:
            if j == i:
                return v
        return 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.free)

    def is_identity(self) -> bool:
        return not self.free and not any(self.torsion)

    def flat(self, window: Sequence[int]) -> list[int]:
        return [self.coord(i) for i in window] + list(self.torsion)

    def norm1(self) -> int:
        return sum(abs(v) for _, v in self.free)

    def size(self) -> int:
        """Max-norm used by the shell enumeration (torsion counts by distance to 0)."""
        s = max((abs(v) for _, v in self.free), default=0)
        for t, m in zip(self.torsion, self.moduli):
            s = max(s, min(t, m - t))
        return s

    def __repr__(self):
        free = ", ".join(f"{i}:{v}" for i, v in self.free)
        tors = f" | {list(self.torsion)}" if self.torsion else ""
        return f"<{free}{tors}>"


# ---------------------------------------------------------------- lattices


@dataclass(frozen=True)
class GeneratorLattice:
    """Integer span G0 of ``generators`` inside ``ambient``.

    For Z^oo the computation runs on ``window`` (default: coordinates
    0..max touched); a window coordinate that no generator touches makes
    the index infinite.
    """

    generators: tuple[GroupElement, ...]
    ambient: GroupDescriptor
    window: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.window is not None:
            object.__setattr__(self, "window", tuple(sorted(set(self.window))))

    @cached_property
    def frame(self) -> tuple[int, ...]:
        if not self.ambient.countable:
            return tuple(range(self.ambient.rank))
        touched = {i for g in self.generators for i in g.support}
        if self.window is not None:
            return tuple(sorted(touched | set(self.window)))
        return tuple(range(max(touched) + 1)) if touched else (0,)

    @cached_property
    def untouched(self) -> tuple[int, ...]:
        touched = {i for g in self.generators for i in g.support}
        return tuple(i for i in self.frame if i not in touched) if self.ambient.countable else ()

    @property
    def ncols(self) -> int:
        return len(self.frame) + len(self.ambient.torsion_orders)

    def relation_rows(self) -> list[list[int]]:
        n, f = self.ncols, len(self.frame)
        return [[a if j == f + i else 0 for j in range(n)] for i, a in enumerate(self.ambient.torsion_orders)]

    def matrix(self) -> list[list[int]]:
        return [g.flat(self.frame) for g in self.generators] + self.relation_rows()

    @cached_property
    def snf(self) -> SnfDecomposition:
        return smith_normal_form(self.matrix(), ncols=self.ncols)

    @cached_property
    def invariants(self) -> tuple[int, ...]:
        """Diagonal of D padded with zeros to one entry per coordinate."""
        diag = list(self.snf.diagonal)
        return tuple(diag + [0] * (self.ncols - len(diag)))

    def coset_key(self, x: GroupElement) -> tuple[int, ...]:
        """Image of ``x`` in sum of Z/d_i (Z for d_i = 0); equal keys iff same coset."""
        v = x.flat(self.frame)
        V = self.snf.V
        y = [sum(v[k] * V[k][i] for k in range(len(v))) for i in range(self.ncols)]
        return tuple(yi % d if d else yi for yi, d in zip(y, self.invariants) if d != 1)

    def contains(self, x: GroupElement) -> bool:
        if any(i not in self.frame for i in x.support):
            return False
        return not any(self.coset_key(x))


def subgroup_index(lat: GeneratorLattice) -> int | float:
    """``[G : G0]`` as an int, or ``INFINITE``."""
    if lat.untouched:
        return INFINITE
    if any(d == 0 for d in lat.invariants):
        return INFINITE
    return math.prod(lat.invariants)


def _box_vectors(lat: GeneratorLattice) -> Iterator[tuple[int, ...]]:
    # e * Z^n lies in the lattice for e = largest invariant factor.
    e = max(lat.invariants) if lat.invariants else 1
    nfree = len(lat.frame)
    ranges = [range(e)] * nfree + [range(a) for a in lat.ambient.torsion_orders]
    return itertools.product(*ranges)


def coset_representatives(lat: GeneratorLattice) -> list[GroupElement]:
    """Lexicographically first nonnegative representative of each coset, in lex order."""
    n = subgroup_index(lat)
    if n == INFINITE:
        raise InfiniteIndex(f"subgroup of {lat.ambient.label()} has infinite index")
    G = lat.ambient
    nfree = len(lat.frame)
    seen: set[tuple[int, ...]] = set()
    reps = []
    for v in _box_vectors(lat):
        x = G.element(dict(zip(lat.frame, v[:nfree])), v[nfree:])
        key = lat.coset_key(x)
        if key not in seen:
            seen.add(key)
            reps.append(x)
            if len(reps) == n:
                break
    return reps


# ---------------------------------------------------------- linear systems


def _integer_row_basis(vectors: list[list[int]]) -> list[list[int]]:
    """Basis of the Z-span of ``vectors``: rows ``d_i * (V^-1)_i`` from ``U R V = D``."""
    from sympy import Matrix

    snf = smith_normal_form(vectors)
    Vinv = Matrix(snf.V).inv()
    return [[int(d * x) for x in Vinv.row(i)] for i, d in enumerate(snf.diagonal) if d]


def _lll(basis: list[list[int]]) -> list[list[int]]:
    if len(basis) < 2:
        return basis
    from sympy.polys.domains import ZZ
    from sympy.polys.matrices import DomainMatrix

    M = DomainMatrix([[ZZ(x) for x in row] for row in basis], (len(basis), len(basis[0])), ZZ)
    return [[int(x) for x in row] for row in M.lll().to_list()]


def _min_sup_ratio(basis: list[list[int]]) -> float:
    """Lower bound for min ||t B||_1 over real t with ||t||_inf = 1."""
    r, m = len(basis), len(basis[0])
    B = np.array(basis, dtype=float)  # r x m
    best = math.inf
    for i in range(r):
        # variables: t (r), u (m); minimize sum u with -u <= t B <= u, t_i = 1
        c = np.concatenate([np.zeros(r), np.ones(m)])
        A_ub = np.block([[B.T, -np.eye(m)], [-B.T, -np.eye(m)]])
        b_ub = np.zeros(2 * m)
        bounds = [(-1, 1)] * r + [(0, None)] * m
        bounds[i] = (1, 1)
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        best = min(best, res.fun)
    return best * (1 - 1e-9) - 1e-9


def express_in_generators(h: GroupElement, lat: GeneratorLattice, budget: int = 200_000) -> tuple[int, ...]:
    """Integer ``alpha`` with ``sum alpha_k g_k = h`` and least ``sum |alpha_k|``.

    Ties go to the lexicographically smallest vector. Raises ``NotInSubgroup``.
    """
    if any(i not in lat.frame for i in h.support):
        raise NotInSubgroup(f"{h} uses coordinates outside the lattice frame")
    m = len(lat.generators)
    cols = lat.matrix()  # columns of the linear system A z = h
    n = lat.ncols
    A = [[cols[j][i] for j in range(len(cols))] for i in range(n)]
    target = h.flat(lat.frame)
    snf = smith_normal_form(A, ncols=len(cols))
    Uh = [sum(snf.U[i][k] * target[k] for k in range(n)) for i in range(n)]
    diag = snf.diagonal
    y = [0] * len(cols)
    for i in range(n):
        d = diag[i] if i < len(diag) else 0
        if d == 0:
            if Uh[i] != 0:
                raise NotInSubgroup(f"{h} is not in the subgroup")
        elif Uh[i] % d:
            raise NotInSubgroup(f"{h} is not in the subgroup")
        else:
            y[i] = Uh[i] // d
    V = snf.V
    z = [sum(V[i][k] * y[k] for k in range(len(y))) for i in range(len(cols))]
    alpha0 = z[:m]
    rank = snf.rank
    kernel = [[V[i][k] for i in range(m)] for k in range(rank, len(cols))]
    basis = _lll(_integer_row_basis(kernel)) if kernel and m else []
    if not basis:
        return tuple(alpha0)

    # Babai rounding to start near the optimum.
    B = np.array(basis, dtype=float)
    coeffs = np.linalg.lstsq(B.T, -np.array(alpha0, dtype=float), rcond=None)[0]
    t0 = [int(round(c)) for c in coeffs]
    alpha0 = [a + sum(t0[r] * basis[r][k] for r in range(len(basis))) for k, a in enumerate(alpha0)]

    def key(alpha):
        return (sum(abs(a) for a in alpha), tuple(alpha))

    best = tuple(alpha0)
    sigma = _min_sup_ratio(basis)
    base_l1 = sum(abs(a) for a in alpha0)
    r = len(basis)
    visited = 0
    R = 1
    while sigma * R - base_l1 <= key(best)[0]:
        for t in itertools.product(range(-R, R + 1), repeat=r):
            if max(abs(x) for x in t) != R:
                continue
            visited += 1
            if visited > budget:
                raise BudgetExceeded("express_in_generators: kernel enumeration budget exhausted")
            cand = tuple(a + sum(t[i] * basis[i][k] for i in range(r)) for k, a in enumerate(alpha0))
            if key(cand) < key(best):
                best = cand
        R += 1
    return best


# ------------------------------------------------------------- annihilator


@dataclass(frozen=True)
class AnnihilatorDescription:
    """G0^perp as a finite character group or a positive-dimensional one.

    ``generators`` are angle vectors over ``frame`` coordinates followed by
    torsion slots; ``directions`` span the identity component (integer
    vectors, real multiples taken mod 1).
    """

    ambient: GroupDescriptor
    frame: tuple[int, ...]
    finite: bool
    order: int | float
    generators: tuple[tuple[Fraction, ...], ...]
    directions: tuple[tuple[int, ...], ...]
    unbounded_coordinates: bool = False

    @property
    def kind(self) -> str:
        # An untouched Z^oo coordinate contributes a whole circle factor, so
        # that case is positive-dimensional too; ``unbounded_coordinates`` tells them apart.
        return "Finite" if self.finite else "PositiveDimensional"

    def elements(self, limit: int = 100_000) -> list[tuple[Fraction, ...]]:
        """All characters of a finite annihilator, as reduced angle vectors."""
        if not self.finite:
            raise InfiniteIndex("annihilator is infinite")
        if self.order > limit:
            raise BudgetExceeded(f"annihilator of order {self.order} exceeds limit {limit}")
        n = len(self.frame) + len(self.ambient.torsion_orders)
        found = {tuple(Fraction(0) for _ in range(n))}
        frontier = list(found)
        while frontier:
            nxt = []
            for a in frontier:
                for g in self.generators:
                    b = tuple((x + y) % 1 for x, y in zip(a, g))
                    if b not in found:
                        found.add(b)
                        nxt.append(b)
            frontier = nxt
        return sorted(found)

    def characters(self, limit: int = 100_000):
        from .characters import Character

        return [Character.from_angle_vector(self.ambient, self.frame, v) for v in self.elements(limit)]


def annihilator(lat: GeneratorLattice) -> AnnihilatorDescription:
    V = lat.snf.V
    n = lat.ncols
    gens, dirs = [], []
    for i, d in enumerate(lat.invariants):
        col = [V[k][i] for k in range(n)]
        if d == 0:
            dirs.append(tuple(col))
        elif d > 1:
            gens.append(tuple(Fraction(c, d) % 1 for c in col))
    index = subgroup_index(lat)
    return AnnihilatorDescription(
        ambient=lat.ambient,
        frame=lat.frame,
        finite=index != INFINITE,
        order=index,
        generators=tuple(gens),
        directions=tuple(dirs),
        unbounded_coordinates=bool(lat.untouched),
    )


# ------------------------------------------------------------- enumeration


def _shell(G: GroupDescriptor, s: int) -> list[GroupElement]:
    if G.countable:
        if s == 0:
            return [G.identity]
        out = []
        for v in itertools.product(range(-s, s + 1), repeat=s):
            x = G.element(v)
            top = max(x.support, default=-1) + 1
            if max(x.size(), top) == s:
                out.append(x)
        return out
    l = G.rank
    tors = [range(a) for a in G.torsion_orders]
    out = []
    for f in itertools.product(range(-s, s + 1), repeat=l):
        for t in itertools.product(*tors):
            x = G.element(f, t)
            if x.size() == s:
                out.append(x)
    return out


def iter_elements(G: GroupDescriptor) -> Iterator[GroupElement]:
    """Every element once: shells of increasing size, lexicographic inside a shell."""
    s = 0
    limit = None
    if G.is_finite:
        limit = max((a // 2 for a in G.torsion_orders), default=0)
    while limit is None or s <= limit:
        yield from _shell(G, s)
        s += 1


@dataclass
class Enumeration:
    """The fixed enumeration ``G = {h_1, h_2, ...}`` with ``h_1`` the identity."""

    group: GroupDescriptor
    _items: list[GroupElement] = field(default_factory=list, repr=False)
    _index: dict[GroupElement, int] = field(default_factory=dict, repr=False)
    _source: Iterator[GroupElement] | None = field(default=None, repr=False)

    name = "shells-maxnorm-lex"

    def _extend(self, n: int):
        if self._source is None:
            self._source = iter_elements(self.group)
        while len(self._items) < n:
            try:
                x = next(self._source)
            except StopIteration:
                raise IndexError(f"group {self.group.label()} has only {len(self._items)} elements")
            self._items.append(x)
            self._index[x] = len(self._items)

    def h(self, n: int) -> GroupElement:
        """``h_n`` for ``n >= 1``."""
        if n < 1:
            raise IndexError("enumeration starts at 1")
        self._extend(n)
        return self._items[n - 1]

    def first(self, n: int) -> list[GroupElement]:
        self._extend(n)
        return self._items[:n]

    def index(self, x: GroupElement, search_limit: int = 10**6) -> int:
        while x not in self._index:
            if len(self._items) >= search_limit:
                raise IndexError(f"{x} not among first {search_limit} elements")
            self._extend(len(self._items) + 1)
        return self._index[x]


def lattice_of(elements: Iterable[GroupElement], G: GroupDescriptor, window: Sequence[int] | None = None) -> GeneratorLattice:
    return GeneratorLattice(tuple(elements), G, tuple(window) if window is not None else None)

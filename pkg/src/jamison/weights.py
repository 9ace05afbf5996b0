"""The weight w = sum_n 2^-n m^{*n} and the translation operators on l^2(G, w).

m puts mass 2^-n on the n-th enumerated element, so with a = m/2 the n-th
level is a^{*n} and w = sum_{n>=1} a^{*n}. We compute the levels by
iterated convolution on a dense box. All mass that the truncation drops
(atoms outside the box, mass pushed out of the box, levels beyond N) is
tracked and bounds every value from above by one uniform tail.

Exact mode keeps every level as integers scaled by 2^S (all masses are
dyadic); float mode uses the same shifts in double precision.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.sparse import csr_matrix

from .errors import InsufficientSupport, SupportTooLarge, ValidationError
from .groups import Enumeration, GroupDescriptor, GroupElement

Number = Fraction | float
FLOAT_REL = 1e-9  # relative rounding allowance per value in float mode (observed drift ~1e-12)


@dataclass
class WeightTable:
    group: GroupDescriptor
    enumeration: str
    N: int
    radius: int
    coords: tuple[int, ...]  # free coordinates spanned by the box
    exact: bool
    atoms: int  # h_1..h_atoms lie in the box and carry m
    values: np.ndarray  # scaled ints (exact) or floats
    scale_bits: int
    defects: list  # mass missing from level L (exact Fraction or float upper bound)
    level_mass: list  # captured mass of level L
    underflow: float = 0.0
    _enum: Enumeration | None = field(default=None, repr=False)

    # ------------------------------------------------------------- access

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def index(self, g: GroupElement) -> tuple[int, ...] | None:
        R = self.radius
        if any(i not in self.coords for i in g.support):
            return None
        idx = []
        for i in self.coords:
            v = g.coord(i)
            if abs(v) > R:
                return None
            idx.append(v + R)
        return tuple(idx) + g.torsion

    def contains(self, g: GroupElement) -> bool:
        return self.index(g) is not None

    def element_at(self, idx: tuple[int, ...]) -> GroupElement:
        d = len(self.coords)
        return self.group.element(
            {c: int(i) - self.radius for c, i in zip(self.coords, idx[:d])}, [int(t) for t in idx[d:]]
        )

    def elements(self) -> Iterator[GroupElement]:
        for idx in np.ndindex(*self.shape):
            yield self.element_at(idx)

    def value(self, g: GroupElement) -> Number:
        """Computed w_N restricted to the box (a lower bound for w)."""
        idx = self.index(g)
        if idx is None:
            raise InsufficientSupport(f"{g} outside the weight box")
        v = self.values[idx]
        return Fraction(int(v), 1 << self.scale_bits) if self.exact else float(v)

    @property
    def tail(self) -> Number:
        """Uniform additive bound: w(g) <= value(g) + tail for every g."""
        if self.exact:
            return Fraction(1, 1 << self.N) + sum(self.defects, Fraction(0))
        return 2.0**-self.N + math.fsum(self.defects) + self.underflow

    def lower(self, g: GroupElement) -> Number:
        v = self.value(g)
        return v if self.exact else v * (1 - FLOAT_REL)

    def upper(self, g: GroupElement) -> Number:
        v = self.value(g)
        return v + self.tail if self.exact else v * (1 + FLOAT_REL) + self.tail

    # ------------------------------------------------------------ totals

    @property
    def captured(self) -> Number:
        if self.exact:
            return sum(self.level_mass, Fraction(0))
        return math.fsum(self.level_mass)

    def truncated_total(self) -> Number:
        """sum over all of G of the N-level truncation: captured + dropped = 1 - 2^-N."""
        if self.exact:
            return self.captured + sum(self.defects, Fraction(0))
        return self.captured + math.fsum(self.defects)

    def deficit(self) -> Number:
        """``1 - sum_g w_N(g)`` over the full group (exact in exact mode)."""
        return 1 - self.truncated_total()

    def to_csv(self, path=None) -> str:
        """Rows (element, value, upper); also written to ``path`` when given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["element", "value", "upper"])
        for g in self.elements():
            w.writerow([repr(g), repr(float(self.value(g))), repr(float(self.upper(g)))])
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def _box_atoms(enum: Enumeration, inside) -> int:
    n = 0
    while True:
        try:
            h = enum.h(n + 1)
        except IndexError:
            return n
        if not inside(h):
            return n
        n += 1


def weight_table(
    enum: Enumeration,
    N: int,
    radius: int,
    exact: bool | None = None,
    window: int | None = None,
    max_cells: int = 2_000_000,
) -> WeightTable:
    """Levels 1..N of w on the box ``[-radius, radius]^d x torsion``.

    ``window`` fixes the number of coordinates for Z^oo. Exact mode is the
    default for N <= 40.
    """
    G = enum.group
    if N < 1 or radius < 0:
        raise ValidationError("need N >= 1 and radius >= 0", "policy")
    if exact is None:
        exact = N <= 40
    if G.countable:
        if not window:
            raise ValidationError("Z^oo weight tables need a coordinate window", "window")
        coords = tuple(range(window))
    else:
        coords = tuple(range(G.rank))
    tors = G.torsion_orders
    shape = (2 * radius + 1,) * len(coords) + tors
    cells = math.prod(shape)
    if cells > max_cells:
        raise SupportTooLarge(f"weight box has {cells} cells > {max_cells}")

    def inside(h: GroupElement) -> bool:
        return all(i in coords and abs(v) <= radius for i, v in h.free)

    M = _box_atoms(enum, inside)
    if M == 0:
        raise InsufficientSupport("no enumerated element inside the box")
    atoms = enum.first(M)
    d = len(coords)
    # Shift geometry per atom: destination/source slices along free axes.
    geo = []
    for h in atoms:
        dst, src = [], []
        for i in coords:
            o = h.coord(i)
            L = 2 * radius + 1
            dst.append(slice(max(0, o), L - max(0, -o)))
            src.append(slice(max(0, -o), L - max(0, o)))
        tail = [slice(None)] * len(tors)
        roll = tuple(h.torsion)
        outside = np.ones(shape, dtype=bool)
        outside[tuple(src + tail)] = False
        geo.append((tuple(dst + tail), tuple(src + tail), roll, outside))
    axes_t = tuple(range(d, d + len(tors)))

    S = N * (M + 1) if exact else 0
    dtype = object if exact else float

    def atom_mass(n: int):  # a(h_n) = 2^-(n+1), n is 1-based
        return 1 << (S - n - 1) if exact else 2.0 ** -(n + 1)

    C = np.zeros(shape, dtype=dtype)
    if exact:
        C[...] = 0
    for n, h in enumerate(atoms, start=1):
        C[_idx(h, coords, radius)] += atom_mass(n)
    total = C.copy()
    missing_atoms = Fraction(1, 1 << (M + 1)) if exact else 2.0 ** -(M + 1)
    if exact:
        level_mass = [Fraction(int(C.sum()), 1 << S)]
        defects = [Fraction(1, 2) - level_mass[0]]
    else:
        level_mass = [float(C.sum())]
        defects = [missing_atoms]
    underflow = 0.0
    tiny = np.finfo(float).tiny

    for L in range(2, N + 1):
        new = np.zeros(shape, dtype=dtype)
        if exact:
            new[...] = 0
        exit_mass = 0.0
        for n, (dst, src, roll, outside) in enumerate(geo, start=1):
            block = np.roll(C, roll, axes_t) if any(roll) else C
            if exact:
                new[dst] += block[src] >> (n + 1)
            else:
                w = 2.0 ** -(n + 1)
                new[dst] += block[src] * w
                # mass pushed out of the box, summed directly (no cancellation)
                exit_mass += float(block[outside].sum()) * w
        if exact:
            m = Fraction(int(new.sum()), 1 << S)
            level_mass.append(m)
            defects.append(Fraction(1, 1 << L) - m)
        else:
            prev = level_mass[-1]
            level_mass.append(float(new.sum()))
            # D_L <= D_{L-1}/2 + |C_{L-1}| * 2^-(M+1) + exit
            defects.append(defects[-1] / 2 + prev * missing_atoms + exit_mass)
            underflow += cells * M * tiny
        total += new
        C = new
    return WeightTable(
        group=G,
        enumeration=enum.name,
        N=N,
        radius=radius,
        coords=coords,
        exact=exact,
        atoms=M,
        values=total,
        scale_bits=S,
        defects=defects,
        level_mass=level_mass,
        underflow=underflow,
        _enum=enum,
    )


def _idx(h: GroupElement, coords, radius) -> tuple[int, ...]:
    return tuple(h.coord(i) + radius for i in coords) + h.torsion


# ------------------------------------------------------------ translations


@dataclass
class RatioReport:
    shift_index: int
    bound: float  # the proven constant
    max_ratio: float  # point estimate
    max_ratio_upper: float  # certified (unfavorable endpoints)
    argmax: GroupElement | None
    pairs: int
    holds: bool
    strict_bound: float | None = None
    strict_holds: bool | None = None


def _ratio_upper(wt: WeightTable, num: GroupElement, den: GroupElement) -> float:
    lo = wt.lower(den)
    if lo <= 0:
        return math.inf
    return float(Fraction(wt.upper(num)) / Fraction(lo)) if wt.exact else wt.upper(num) / lo


def subinvariance_check(wt: WeightTable, l: int, tail_ratio: float = 1e-6) -> RatioReport:
    """max over g of w(g - h_l) / w(g), against 2^(l+1) (and the stricter sqrt(2)^(l+1)).

    This is ||rho(h_l) delta_g||^2 / ||delta_g||^2. Only pairs where the
    tail is below ``tail_ratio`` times both values count.
    """
    h = wt._enum.h(l)
    tail = float(wt.tail)
    best, best_up, arg, pairs = 0.0, 0.0, None, 0
    for g in wt.elements():
        x = g - h
        if not wt.contains(x):
            continue
        vg, vx = float(wt.value(g)), float(wt.value(x))
        if vg <= 0 or vx <= 0 or tail > tail_ratio * min(vg, vx):
            continue
        pairs += 1
        r = vx / vg
        up = _ratio_upper(wt, x, g)
        if r > best:
            best, arg = r, g
        best_up = max(best_up, up)
    if pairs == 0:
        raise InsufficientSupport("no pair with tail small relative to the values")
    bound = 2.0 ** (l + 1)
    strict = math.sqrt(2.0) ** (l + 1)
    return RatioReport(l, bound, best, best_up, arg, pairs, best_up <= bound, strict, best <= strict)


@dataclass
class TranslationNorm:
    k: int
    value: float  # point estimate of sup_m sqrt(w(h_m - h_k) / w(h_m))
    upper: float
    bound: float
    holds: bool
    argmax: int
    m_max: int
    matrix_norm: float | None = None  # spectral norm of the truncated matrix (dense SVD)
    diag_max: float | None = None  # max ratio over the same truncated index set


def translation_norm(wt: WeightTable, k: int, m_max: int = 200, cross_check: bool = True) -> TranslationNorm:
    """Norm of rho(h_k) on span{delta_{h_m} : m <= m_max}.

    rho(h_k) sends delta_{h_m} to delta_{h_m - h_k}: a weighted permutation in
    the Dirac basis, so the norm is the largest column ratio.
    """
    enum = wt._enum
    hk = enum.h(k)
    best, best_up, arg = 0.0, 0.0, 1
    for m in range(1, m_max + 1):
        hm = enum.h(m)
        x = hm - hk
        if not (wt.contains(hm) and wt.contains(x)):
            raise InsufficientSupport(f"h_{m} - h_{k} leaves the weight box")
        r = math.sqrt(float(wt.value(x)) / float(wt.value(hm)))
        up = math.sqrt(_ratio_upper(wt, x, hm))
        if r > best:
            best, arg = r, m
        best_up = max(best_up, up)
    bound = math.sqrt(2.0) ** (k + 1)
    out = TranslationNorm(k, best, best_up, bound, best_up <= bound, arg, m_max)
    if cross_check:
        T, diag = translation_matrix(wt, k, m_max)
        out.diag_max = diag
        out.matrix_norm = float(np.linalg.norm(T.toarray(), 2)) if T.nnz else 0.0
    return out


def translation_matrix(wt: WeightTable, k: int, m_max: int) -> tuple[csr_matrix, float]:
    """rho(h_k) in the orthonormal basis delta_{h_m}/||delta_{h_m}||, m <= m_max, truncated to that span."""
    enum = wt._enum
    hk = enum.h(k)
    index = {enum.h(m): m for m in range(1, m_max + 1)}
    rows, cols, vals = [], [], []
    for m in range(1, m_max + 1):
        hm = enum.h(m)
        j = index.get(hm - hk)
        if j is None:
            continue
        rows.append(j - 1)
        cols.append(m - 1)
        vals.append(math.sqrt(float(wt.value(hm - hk)) / float(wt.value(hm))))
    T = csr_matrix((vals, (rows, cols)), shape=(m_max, m_max))
    return T, max(vals, default=0.0)


# ------------------------------------------------------------ sparse vectors


@dataclass(frozen=True)
class SparseVector:
    """Finitely supported function G -> C."""

    coeffs: tuple[tuple[GroupElement, complex], ...]

    @classmethod
    def of(cls, data: Mapping[GroupElement, complex] | Iterable[tuple[GroupElement, complex]]) -> SparseVector:
        items = data.items() if isinstance(data, Mapping) else data
        acc: dict[GroupElement, complex] = {}
        for g, c in items:
            acc[g] = acc.get(g, 0) + complex(c)
        return cls(tuple((g, c) for g, c in acc.items() if c != 0))

    @classmethod
    def dirac(cls, g: GroupElement) -> SparseVector:
        return cls(((g, 1 + 0j),))

    @classmethod
    def from_function(cls, f, support: Iterable[GroupElement]) -> SparseVector:
        return cls.of((g, f(g)) for g in support)

    def as_dict(self) -> dict[GroupElement, complex]:
        return dict(self.coeffs)

    def translate(self, g: GroupElement) -> SparseVector:
        """(rho(g) f)(x) = f(x + g): the support moves by -g."""
        return SparseVector(tuple((x - g, c) for x, c in self.coeffs))

    def scale(self, c: complex) -> SparseVector:
        return SparseVector.of((x, v * c) for x, v in self.coeffs)

    def __add__(self, other: SparseVector) -> SparseVector:
        return SparseVector.of(list(self.coeffs) + list(other.coeffs))

    def __sub__(self, other: SparseVector) -> SparseVector:
        return self + other.scale(-1)

    def norm_sq_bounds(self, wt: WeightTable) -> tuple[float, float]:
        lo = hi = 0.0
        for x, c in self.coeffs:
            a = abs(c) ** 2
            lo += a * float(wt.lower(x))
            hi += a * float(wt.upper(x))
        return lo, hi

    def max_abs_diff(self, other: SparseVector) -> float:
        a, b = self.as_dict(), other.as_dict()
        return max((abs(a.get(x, 0) - b.get(x, 0)) for x in set(a) | set(b)), default=0.0)

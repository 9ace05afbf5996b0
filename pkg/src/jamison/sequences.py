"""Sequences (g_k) in a group: explicit lists and formula families.

Formula families know how to reduce themselves modulo q, which is what
makes metric values for rational characters certifiable over all k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence, Union

from .errors import BudgetExceeded, NotCertifiable, ValidationError
from .groups import Enumeration, GroupDescriptor, GroupElement


@dataclass(frozen=True)
class ExplicitList:
    terms: tuple[GroupElement, ...]
    # exhaustive: the list is the full set of values (the sequence cycles through it)
    exhaustive: bool = True

    family = "explicit"


@dataclass(frozen=True)
class Geometric:
    c: int = 1
    ratio: int = 2

    family = "geometric"

    def value(self, k: int) -> int:
        return self.c * self.ratio**k


@dataclass(frozen=True)
class DoubleExponential:
    base: int = 2

    family = "double_exp"

    def value(self, k: int) -> int:
        if k > 24:
            raise BudgetExceeded(f"term {k} of {self.base}^(2^k) has more than 2^24 digits")
        return self.base ** (2**k)


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[int, ...] = (1, 1)  # constant term first: (1, 1) is k + 1

    family = "polynomial"

    def value(self, k: int) -> int:
        return sum(c * k**i for i, c in enumerate(self.coeffs))


@dataclass(frozen=True)
class AllElements:
    family = "all"


@dataclass(frozen=True)
class CanonicalBasis:
    start: int = 0

    family = "canonical_basis"


Body = Union[ExplicitList, Geometric, DoubleExponential, Polynomial, AllElements, CanonicalBasis]
SCALAR = (Geometric, DoubleExponential, Polynomial)


@dataclass(frozen=True)
class SequenceSpec:
    """The sequence ``prefix + body`` in ``ambient``.

    Scalar families (geometric, double exponential, polynomial) live on the
    free coordinate ``coordinate``; on Z that is just the integer sequence.
    """

    ambient: GroupDescriptor
    body: Body
    prefix: tuple[GroupElement, ...] = ()
    coordinate: int = 0
    name: str | None = None
    _enum: Enumeration | None = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        G, b = self.ambient, self.body
        if isinstance(b, ExplicitList) and not b.terms:
            raise ValidationError("explicit sequence must be nonempty", "sequence.terms")
        if isinstance(b, Geometric):
            if b.ratio < 2:
                raise ValidationError("geometric ratio must be >= 2", "sequence.ratio")
            if b.c == 0:
                raise ValidationError("geometric constant must be nonzero", "sequence.c")
        if isinstance(b, DoubleExponential) and b.base < 2:
            raise ValidationError("double exponential base must be >= 2", "sequence.base")
        if isinstance(b, Polynomial) and not any(b.coeffs):
            raise ValidationError("polynomial must be nonzero", "sequence.coeffs")
        if isinstance(b, SCALAR):
            if self.coordinate < 0 or (not G.countable and self.coordinate >= G.rank):
                raise ValidationError(f"coordinate {self.coordinate} outside {G.label()}", "sequence.coordinate")
        if isinstance(b, CanonicalBasis) and b.start < 0:
            raise ValidationError("start must be >= 0", "sequence.start")
        if G.is_finite and isinstance(b, CanonicalBasis) and not G.torsion_orders:
            raise ValidationError("trivial group has no basis", "sequence.family")
        if self._enum is None:
            object.__setattr__(self, "_enum", Enumeration(G))

    # -------------------------------------------------------------- terms

    @property
    def finite_values(self) -> bool:
        """True when the set of values is known to be finite and explicit."""
        b = self.body
        if isinstance(b, ExplicitList):
            return b.exhaustive
        if isinstance(b, CanonicalBasis):
            return not self.ambient.countable
        return False

    def _basis_cycle(self) -> list[GroupElement]:
        out = unit_vectors(self.ambient)
        return out[self.body.start :] or out  # type: ignore[union-attr]

    def body_term(self, k: int) -> GroupElement:
        G, b = self.ambient, self.body
        if isinstance(b, SCALAR):
            return G.element({self.coordinate: b.value(k)})
        if isinstance(b, ExplicitList):
            if k < len(b.terms):
                return b.terms[k]
            if b.exhaustive:
                return b.terms[k % len(b.terms)]
            raise IndexError(f"explicit list has only {len(b.terms)} known terms")
        if isinstance(b, AllElements):
            return self._enum.h(k + 1)
        if isinstance(b, CanonicalBasis):
            if G.countable:
                return G.basis(b.start + k)
            cyc = self._basis_cycle()
            return cyc[k % len(cyc)]
        raise TypeError(b)

    def term(self, k: int) -> GroupElement:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.body_term(k - len(self.prefix))

    def terms(self, K: int) -> list[GroupElement]:
        return [self.term(k) for k in range(K)]

    def distinct_values(self) -> list[GroupElement]:
        """All values of a sequence with finitely many explicit values."""
        if not self.finite_values:
            raise NotCertifiable("sequence has no finite explicit value set")
        b = self.body
        vals = list(self.prefix) + (list(b.terms) if isinstance(b, ExplicitList) else self._basis_cycle())
        return list(dict.fromkeys(vals))

    def with_prefix(self, extra: Sequence[GroupElement]) -> SequenceSpec:
        return replace(self, prefix=tuple(extra) + self.prefix)

    # ------------------------------------------------------- descriptions

    def describe(self) -> str:
        b = self.body
        if isinstance(b, Geometric):
            s = f"{b.c}*{b.ratio}^k"
        elif isinstance(b, DoubleExponential):
            s = f"{b.base}^(2^k)"
        elif isinstance(b, Polynomial):
            s = " + ".join(f"{c}*k^{i}" for i, c in enumerate(b.coeffs) if c)
        elif isinstance(b, AllElements):
            s = "all elements"
        elif isinstance(b, CanonicalBasis):
            s = f"e_(k+{b.start})"
        else:
            s = f"explicit[{len(b.terms)}]"
        if isinstance(b, SCALAR) and (self.ambient.countable or self.ambient.rank > 1):
            s += f" on coordinate {self.coordinate}"
        if self.prefix:
            s = f"{len(self.prefix)} prefix terms, then {s}"
        return s

    def bounded_ratio(self) -> bool | None:
        """``sup n_{k+1}/n_k < oo`` for positive increasing integer families, else None."""
        b = self.body
        if not isinstance(b, SCALAR):
            return None
        vals = [b.value(k) for k in range(6)]
        if any(v <= 0 for v in vals) or any(x >= y for x, y in zip(vals, vals[1:])):
            return None
        if isinstance(b, DoubleExponential):
            return False
        if isinstance(b, Geometric):
            return True
        # Polynomial: p(k+1)/p(k) -> 1; positive on k >= 0 when checked above and leading coeff > 0.
        lead = [c for c in b.coeffs if c][-1]
        return True if lead > 0 else None


def unit_vectors(G: GroupDescriptor) -> list[GroupElement]:
    """Free basis vectors followed by the unit of each torsion slot."""
    out = [G.basis(i) for i in range(G.rank)]
    for i in range(len(G.torsion_orders)):
        t = [0] * len(G.torsion_orders)
        t[i] = 1
        out.append(G.element((), t))
    return out


# ------------------------------------------------------------ residue orbits


@dataclass(frozen=True)
class ResidueOrbit:
    """The exact set ``{g_k mod q : k >= 0}`` projected onto ``coords`` (+ torsion)."""

    modulus: int
    coords: tuple[int, ...]
    residues: frozenset[tuple[int, ...]]
    certificate: str


def _reduce(x: GroupElement, q: int, coords: Sequence[int]) -> tuple[int, ...]:
    return tuple(x.coord(i) % q for i in coords) + x.torsion


def _scalar_orbit(b, q: int, max_steps: int) -> tuple[set[int], str]:
    if isinstance(b, Polynomial):
        if q > max_steps:
            raise BudgetExceeded(f"polynomial orbit mod {q} needs {q} steps")
        return {b.value(k) % q for k in range(q)}, f"polynomial values are periodic with period {q}"
    if isinstance(b, Geometric):
        x, step = b.c % q, (lambda v: v * b.ratio % q)
    else:
        x, step = b.base % q, (lambda v: v * v % q)
    seen: dict[int, int] = {}
    k = 0
    while x not in seen:
        if k > max_steps:
            raise BudgetExceeded(f"no cycle mod {q} within {max_steps} steps")
        seen[x] = k
        x = step(x)
        k += 1
    start = seen[x]
    return set(seen), f"recurrence mod {q} enters a cycle of length {k - start} at k={start}"


def residue_orbit(seq: SequenceSpec, q: int, coords: Sequence[int] | None = None, max_steps: int = 10**6) -> ResidueOrbit:
    """Exact finite set of residues of the whole sequence modulo ``q``.

    Free coordinates are reduced mod ``q`` (only ``coords`` are kept; the
    default is every free coordinate of a finitely generated group); torsion
    residues are kept as they are.
    """
    G, b = seq.ambient, seq.body
    if q < 1:
        raise ValueError("modulus must be positive")
    if coords is None:
        if G.countable:
            raise ValueError("coords required for Z^oo")
        coords = tuple(range(G.rank))
    coords = tuple(coords)
    out = {_reduce(x, q, coords) for x in seq.prefix}
    ntor = len(G.torsion_orders)
    if isinstance(b, ExplicitList):
        if not b.exhaustive:
            raise NotCertifiable("explicit list is not exhaustive; no residue oracle")
        out |= {_reduce(x, q, coords) for x in b.terms}
        cert = f"exhaustive list of {len(b.terms)} values"
    elif isinstance(b, SCALAR):
        vals, cert = _scalar_orbit(b, q, max_steps)
        for v in vals:
            out.add(tuple(v if i == seq.coordinate else 0 for i in coords) + (0,) * ntor)
    elif isinstance(b, AllElements):
        total = q ** len(coords) * math.prod(G.torsion_orders)
        if total > max_steps:
            raise BudgetExceeded(f"all-elements orbit mod {q} has {total} residues")
        tors = [range(a) for a in G.torsion_orders]
        out |= set(itertools.product(*([range(q)] * len(coords)), *tors))
        cert = "every residue class is hit"
    elif isinstance(b, CanonicalBasis):
        if G.countable:
            for i in coords:
                if i >= b.start:
                    out.add(tuple(int(i == j) % q for j in coords))
            out.add((0,) * len(coords))  # infinitely many terms leave the window
            cert = "basis vectors inside the window, zero outside"
        else:
            out |= {_reduce(x, q, coords) for x in seq._basis_cycle()}
            cert = "finite basis cycle"
    else:
        raise TypeError(b)
    return ResidueOrbit(q, coords, frozenset(out), cert)


def iter_terms(seq: SequenceSpec) -> Iterator[GroupElement]:
    k = 0
    while True:
        try:
            yield seq.term(k)
        except IndexError:
            return
        k += 1

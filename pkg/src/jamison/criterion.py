"""The Jamison decision pipeline.

Index obstruction first; then certified witnesses of non-separation
(characters chi != 1 with sup_k |chi(g_k) - 1| < eps, proven over all k
through residue orbits); then a Lipschitz-certified grid lower bound for the
separation constant on the truncated, annihilator-excluded torus.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .characters import (
    Character,
    MetricValue,
    certified_lt,
    certified_max_fold,
    chord,
    chord_interval,
    d_metric,
)
from .errors import BudgetExceeded, NotCertifiable, ResolutionInsufficient, ValidationError
from .groups import INFINITE, annihilator, coset_representatives, lattice_of, subgroup_index
from .sequences import (
    AllElements,
    CanonicalBasis,
    DoubleExponential,
    ExplicitList,
    Geometric,
    Polynomial,
    SCALAR,
    SequenceSpec,
    iter_terms,
    residue_orbit,
    unit_vectors,
)

# ------------------------------------------------------------ augmentation


def generated_lattice(seq: SequenceSpec, K: int | None = None, window: Sequence[int] | None = None):
    """Lattice spanned by the sequence.

    Finite-valued sequences use all their values; formula families are
    handled structurally where the span is known, otherwise by the first K terms.
    """
    G, b = seq.ambient, seq.body
    if seq.finite_values:
        gens = seq.distinct_values()
    elif isinstance(b, AllElements) and not G.countable:
        gens = list(seq.prefix) + unit_vectors(G)
    elif isinstance(b, CanonicalBasis) and G.countable:
        gens = list(seq.prefix) + [G.basis(i) for i in range(b.start, b.start + (K or 64))]
    elif isinstance(b, SCALAR):
        # c*r^k and b^(2^k) span what their first term spans; an integer
        # polynomial's values span what its first deg+1 values span.
        n = len(b.coeffs) if isinstance(b, Polynomial) else 1
        gens = list(seq.prefix) + [seq.body_term(k) for k in range(n)]
    else:
        gens = list(itertools.islice(iter_terms(seq), K or 64))
    return lattice_of(gens, G, window)


def augment_to_generating(seq: SequenceSpec, K: int = 64) -> SequenceSpec:
    """Prepend coset representatives so that the sequence spans the whole group."""
    lat = generated_lattice(seq, K)
    if seq.ambient.countable and isinstance(seq.body, CanonicalBasis) and seq.body.start > 0:
        raise ValidationError("Z^oo basis starting past 0 misses coordinates")
    reps = coset_representatives(lat)
    return seq.with_prefix(reps)


# ------------------------------------------------------------- reports


@dataclass
class SeparationReport:
    mode: str  # "WitnessFound" | "LowerBound"
    witness: Character | None = None
    metric: MetricValue | None = None
    epsilon: float | None = None
    lower_bound: float | None = None
    grid: int | None = None
    delta: float | None = None
    K: int | None = None
    observed_min: float | None = None
    argmin: tuple | None = None
    slack: float | None = None
    candidates_tried: int = 0
    trace: list[str] = field(default_factory=list)
    scope: str = ""

    @property
    def certified(self) -> bool:
        if self.mode == "WitnessFound":
            return bool(self.metric and self.metric.certified)
        return self.lower_bound is not None


# ------------------------------------------------------------ witnesses


def _free_coords(seq: SequenceSpec, K: int) -> tuple[int, ...]:
    G = seq.ambient
    if not G.countable:
        return tuple(range(G.rank))
    touched = sorted({i for g in seq.terms(K) for i in g.support})
    return tuple(touched) or (0,)


def _structured_denominators(seq: SequenceSpec, max_bits: int) -> Iterator[int]:
    b = seq.body
    if isinstance(b, DoubleExponential):
        K = 1
        while (2**K) * b.base.bit_length() <= max_bits:
            yield b.base ** (2**K)
            K += 1
    elif isinstance(b, Geometric):
        # c*r^k mod r^j only sees j residues; long powers add nothing new
        j = 1
        while j * b.ratio.bit_length() <= min(max_bits, 64):
            yield b.ratio**j
            j += 1


def _candidates(seq: SequenceSpec, q_max: int, max_bits: int, numerators: int, full_dim_q: int, K: int, eps: float = 0.0):
    """Deterministic schedule of (denominator, character) pairs, cheapest guesses first."""
    G = seq.ambient
    coords = _free_coords(seq, K)
    # pure torsion characters: finitely many
    if G.torsion_orders and math.prod(G.torsion_orders) <= 4096:
        for t in itertools.product(*[range(a) for a in G.torsion_orders]):
            if any(t):
                yield None, Character(G, (), t)
    if isinstance(seq.body, CanonicalBasis) and G.countable:
        window = [i for i in coords if i >= seq.body.start][:8] or [seq.body.start]
        # every term sees the same gap 2 sin(pi/q): start at the first q that can work
        q0 = max(2, int(math.pi / math.asin(min(1.0, eps / 2))) - 1) if eps else 2
        for q in range(q0, max(q_max, q0 + 4) + 1):
            yield q, Character(G, tuple((i, Fraction(1, q)) for i in window))
    c0 = seq.coordinate if seq.coordinate in coords else coords[0]
    for q in _structured_denominators(seq, max_bits):
        for p in range(1, min(numerators, q // 2) + 1):
            if math.gcd(p, q) == 1:
                yield q, Character(G, ((c0, Fraction(p, q)),))
    for q in range(2, q_max + 1):
        yield q, ("sweep", coords)
        if 1 < len(coords) and q <= full_dim_q and q ** len(coords) <= 200_000:
            for ps in itertools.product(range(q), repeat=len(coords)):
                if math.gcd(q, *ps) == 1 and sum(1 for p in ps if p) > 1:
                    yield q, Character(G, tuple(zip(coords, (Fraction(p, q) for p in ps))))


def _sweep(seq: SequenceSpec, q: int, coords: tuple[int, ...], eps: float):
    """Best single-coordinate angle p/q (p <= q/2, coprime) by exact residue arithmetic.

    Yields characters in order (coordinate, p) whose certified sup is below eps.
    """
    G = seq.ambient
    orbit = residue_orbit(seq, q, coords)
    R = np.array(sorted(orbit.residues), dtype=object if q > 3_000_000_000 else np.int64)
    ps = [p for p in range(1, q // 2 + 1) if math.gcd(p, q) == 1]
    if not ps or R.size == 0:
        return 0, []
    found = []
    for c in range(len(coords)):
        r = R[:, c]
        P = np.array(ps, dtype=R.dtype)[:, None]
        n = (P * r[None, :]) % q
        folds = np.minimum(n, q - n).max(axis=1)
        for p, f in zip(ps, folds):
            if float(chord(Fraction(int(f), q))) < eps + 1e-9:
                found.append((Character(G, ((coords[c], Fraction(p, q)),)), Fraction(int(f), q)))
    return len(ps) * len(coords), found


def witness_search(
    seq: SequenceSpec,
    eps: float,
    budget: int = 2_000_000,
    q_max: int = 200,
    max_bits: int = 4096,
    numerators: int = 16,
    full_dim_q: int = 24,
    K: int = 64,
) -> SeparationReport | None:
    """First character (in schedule order) with ``d(chi, 1) < eps``, or None.

    Certified through the residue orbit whenever the sequence has one; a
    non-exhaustive explicit list gives an empirical witness over its known
    terms. Raises BudgetExceeded when the candidate budget runs out before
    the schedule is exhausted.
    """
    if not (0 < eps <= 2):
        raise ValidationError("epsilon must lie in (0, 2]", "epsilon")
    G = seq.ambient
    one = Character.trivial(G)
    empirical = isinstance(seq.body, ExplicitList) and not seq.body.exhaustive
    tried = 0

    def accept(chi: Character, fold: Fraction | float, certified: bool) -> SeparationReport:
        mv = MetricValue(chord(fold), certified, None if certified else K_emp, fold)
        note = "sup over all k, via residue orbit" if certified else f"empirical: first {K_emp} known terms"
        return SeparationReport("WitnessFound", chi, mv, epsilon=eps, candidates_tried=tried, scope=note)

    K_emp = len(seq.prefix) + len(seq.body.terms) if empirical else None  # type: ignore[union-attr]
    for q, cand in _candidates(seq, q_max, max_bits, numerators, full_dim_q, K, eps):
        if isinstance(cand, tuple):
            if empirical:
                continue
            n, found = _sweep(seq, q, cand[1], eps)
            tried += n
            for chi, f in found:
                if certified_lt(chord_interval(f), eps):
                    return accept(chi, f, True)
        else:
            tried += 1
            if empirical:
                mv = d_metric(cand, one, seq, K_emp)
                if mv.value < eps:
                    return accept(cand, mv.fold, False)
            else:
                try:
                    f = certified_max_fold(cand, seq)
                except (BudgetExceeded, NotCertifiable):
                    continue
                if certified_lt(chord_interval(f), eps):
                    return accept(cand, f, True)
        if tried > budget:
            raise BudgetExceeded(f"witness search tried {tried} candidates without reaching eps={eps}")
    return None


# ----------------------------------------------------------- rational scan


@dataclass
class ScanResult:
    min_fold: Fraction
    min_value: float
    minimizers: list[tuple[int, int]]  # (p, q) attaining the minimum
    q_range: tuple[int, int]
    evaluated: int


def rational_scan(seq: SequenceSpec, q_max: int, q_min: int = 2, odd_only: bool = False) -> ScanResult:
    """Exact ``min over p/q of sup_k |e(p g_k / q) - 1|`` on Z (or one coordinate).

    Every angle p/q with gcd(p, q) = 1 is scanned through the residue orbit
    mod q; the minimum is compared as an exact fold, so ties are exact.
    """
    best: Fraction | None = None
    mins: list[tuple[int, int]] = []
    count = 0
    c = seq.coordinate
    for q in range(q_min, q_max + 1):
        if odd_only and q % 2 == 0:
            continue
        orbit = residue_orbit(seq, q, (c,) if seq.ambient.countable else None)
        idx = 0 if seq.ambient.countable else c
        r = np.array(sorted({x[idx] for x in orbit.residues}), dtype=np.int64)
        ps = np.array([p for p in range(1, q) if math.gcd(p, q) == 1], dtype=np.int64)
        if len(r) == q:
            # p permutes Z/q, so every coprime p sees the same residues
            folds = np.full(len(ps), q // 2, dtype=np.int64)
        else:
            n = (ps[:, None] * r[None, :]) % q
            folds = np.minimum(n, q - n).max(axis=1)
        count += len(ps)
        m = int(folds.min())
        f = Fraction(m, q)
        if best is None or f < best:
            best, mins = f, []
        if f == best:
            mins += [(int(p), q) for p in ps[folds == m]]
    if best is None:
        raise ValidationError("empty scan range")
    return ScanResult(best, chord(best), mins, (q_min, q_max), count)


# -------------------------------------------------------- grid lower bound


def _truncation_annihilator(terms, G):
    lat = lattice_of(terms, G)
    if subgroup_index(lat) == INFINITE:
        raise ResolutionInsufficient("the first K terms do not span a finite-index subgroup; increase K")
    return [tuple(float(x) for x in v) for v in annihilator(lat).elements()]


def separation_lower_bound(
    seq: SequenceSpec, K: int, grid: int, delta: float, max_cells: int = 50_000_000
) -> SeparationReport:
    """Rigorous lower bound of ``min_theta max_{k<K} |e(theta . g_k) - 1|``.

    theta ranges over the torus minus sup-norm delta-balls around the
    characters that kill the first K terms. Vertices i/N are evaluated with
    exact integer angles; each cell of half-width 1/(2N) loses at most
    2 pi max_k ||g_k||_1 / (2N).
    """
    G = seq.ambient
    if G.countable:
        raise ValidationError("grid lower bound needs a finitely generated group", "group")
    if K < 1 or grid < 1 or delta < 0:
        raise ValidationError("need K >= 1, grid >= 1, delta >= 0", "policy")
    d = G.rank
    tors = G.torsion_orders
    N = grid
    cells = N**d * math.prod(tors)
    if cells > max_cells:
        raise BudgetExceeded(f"{cells} grid cells exceed max_cells={max_cells}")
    terms = seq.terms(K)
    ann = _truncation_annihilator(terms, G)

    shape = (N,) * d + tuple(tors)
    axes = np.indices(shape, dtype=np.int64) if shape else np.zeros((0,), dtype=np.int64)
    F = np.zeros(shape, dtype=float)
    for g in terms:
        num = np.zeros(shape, dtype=np.int64)
        for j in range(d):
            num = (num + axes[j] * (g.coord(j) % N)) % N
        ang = num.astype(float) / N
        for i, a in enumerate(tors):
            ang = ang + (axes[d + i] * g.torsion[i] % a) / a
        F = np.maximum(F, 2.0 * np.abs(np.sin(np.pi * ang)))

    half = 0.5 / N
    excluded = np.zeros(shape, dtype=bool)
    for a in ann:
        dist = np.zeros(shape, dtype=float)
        for j in range(d):
            t = np.abs(axes[j] / N - a[j]) % 1.0
            dist = np.maximum(dist, np.minimum(t, 1.0 - t))
        same = np.ones(shape, dtype=bool)
        for i, m in enumerate(tors):
            same &= np.isclose((axes[d + i] / m) % 1.0, a[d + i] % 1.0)
        excluded |= same & (dist + (half if d else 0.0) <= delta)
    if d == 0 and not ann:
        excluded[...] = False

    live = ~excluded
    if not live.any():
        raise ResolutionInsufficient("the exclusion balls cover the whole torus")
    lip = 2 * math.pi * max((g.norm1() for g in terms), default=0)
    slack = lip * half if d else 0.0
    margin = 1e-12
    vals = np.where(live, F, np.inf)
    flat = int(np.argmin(vals))  # C order = lexicographic angle order, first minimum wins
    fmin = float(vals.flat[flat])
    lb = fmin - slack - margin
    idx = np.unravel_index(flat, shape) if shape else ()
    argmin = tuple(Fraction(int(i), N) for i in idx[:d]) + tuple(Fraction(int(t), m) for t, m in zip(idx[d:], tors))
    trace = [f"N={N}: observed min {fmin:.12g}, slack {slack:.3g}, bound {lb:.12g}"]
    if lb <= 0:
        raise ResolutionInsufficient(trace[0] + "; Lipschitz slack exceeds the observed minimum, refine the grid")
    scope = (
        f"min over characters outside sup-norm {delta:g}-balls around the {len(ann)} characters "
        f"killing g_0..g_{K - 1}, of max_(k<{K}) |chi(g_k) - 1|"
    )
    return SeparationReport(
        "LowerBound",
        lower_bound=lb,
        grid=N,
        delta=delta,
        K=K,
        observed_min=fmin,
        argmin=argmin,
        slack=slack,
        trace=trace,
        scope=scope,
    )


# ------------------------------------------------------------ families


def extract_separated_family(chars: Sequence[Character], seq: SequenceSpec, K: int, eps: float, metric=None) -> list[Character]:
    """Greedy first-come eps-separated subfamily (pairwise metric >= eps)."""
    if metric is None:
        def metric(a, b):
            return d_metric(a, b, seq, K).value
    kept: list[Character] = []
    for c in chars:
        if all(metric(c, k) >= eps for k in kept):
            kept.append(c)
    return kept


# ---------------------------------------------------------------- verdict


@dataclass
class VerdictPolicy:
    K: int = 64
    eps_levels: int = 6
    q_max: int = 200
    max_bits: int = 4096
    numerators: int = 16
    witness_budget: int = 2_000_000
    grid: int = 3000  # not a power of 2: dyadic grids sit on the doubling-map orbits
    grid_max: int = 2**20
    max_cells: int = 20_000_000
    delta: float = 1e-3
    bound_K: int | None = None


@dataclass
class Verdict:
    kind: str
    epsilon: float | None = None
    witnesses: list[SeparationReport] = field(default_factory=list)
    lower_bound: SeparationReport | None = None
    index: int | float | None = None
    annihilator_kind: str | None = None
    scope: str = ""
    caveats: list[str] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)

    KINDS = ("NotJamison_InfiniteIndex", "NotJamison_SeparationFails", "JamisonCertified", "Empirical")


def jamison_verdict(seq: SequenceSpec, policy: VerdictPolicy | None = None) -> Verdict:
    P = policy or VerdictPolicy()
    tags = []
    if seq.bounded_ratio():
        tags.append("bounded ratio: Jamison by prior literature (metadata, not certified here)")
    lat = generated_lattice(seq, P.K)
    index = subgroup_index(lat)
    ann = annihilator(lat)
    if index == INFINITE:
        return Verdict(
            "NotJamison_InfiniteIndex",
            index=index,
            annihilator_kind=ann.kind,
            scope="the span of the sequence has infinite index, so its annihilator is uncountable",
            tags=tags,
        )
    if isinstance(seq.body, AllElements):
        return Verdict(
            "JamisonCertified",
            epsilon=1.0,
            index=index,
            annihilator_kind=ann.kind,
            scope="sequence runs through the whole group: sup_k |chi(g_k) - 1| >= 1 for every chi != 1",
            tags=tags,
        )
    aug = augment_to_generating(seq, P.K) if index > 1 else seq
    witnesses, caveats = [], []
    try:
        for m in range(1, P.eps_levels + 1):
            rep = witness_search(aug, 2.0**-m, P.witness_budget, P.q_max, P.max_bits, P.numerators, K=P.K)
            if rep is None:
                break
            witnesses.append(rep)
    except BudgetExceeded as e:
        caveats.append(f"witness search stopped: {e}")
    if len(witnesses) == P.eps_levels and all(w.certified for w in witnesses):
        return Verdict(
            "NotJamison_SeparationFails",
            epsilon=witnesses[-1].metric.value,
            witnesses=witnesses,
            index=index,
            annihilator_kind=ann.kind,
            scope=f"certified witnesses for eps = 2^-1 .. 2^-{P.eps_levels}",
            tags=tags,
        )
    if witnesses:
        caveats.append(f"witnesses found down to eps = 2^-{len(witnesses)} only")
    if aug.ambient.countable:
        caveats.append("no grid bound on Z^oo")
        return Verdict("Empirical", None, witnesses, None, index, ann.kind, "", caveats, tags)
    N_cap = _grid_cap(aug, P)
    bk = P.bound_K or _auto_bound_K(aug, P.K, N_cap)
    N = min(P.grid, N_cap)
    trace: list[str] = []
    while True:
        try:
            lb = separation_lower_bound(aug, bk, N, P.delta, P.max_cells)
            lb.trace = trace + lb.trace
            return Verdict(
                "JamisonCertified",
                epsilon=lb.lower_bound,
                witnesses=witnesses,
                lower_bound=lb,
                index=index,
                annihilator_kind=ann.kind,
                scope=lb.scope,
                caveats=caveats,
                tags=tags,
            )
        except ResolutionInsufficient as e:
            trace.append(str(e))
            if N * 2 > N_cap or "cover" in str(e) or "span" in str(e):
                caveats.append(f"lower bound not certified: {e}")
                break
            N *= 2
        except BudgetExceeded as e:
            caveats.append(f"lower bound not certified: {e}")
            break
    est = None
    try:
        est = min_sampled_separation(aug, bk, P.delta)
    except Exception as e:  # estimate only, never a certificate
        caveats.append(f"no estimate: {e}")
    return Verdict("Empirical", est, witnesses, None, index, ann.kind, "estimate only", caveats, tags)


def _grid_cap(seq: SequenceSpec, P: VerdictPolicy) -> int:
    G = seq.ambient
    if G.rank == 0:
        return 1
    per = P.max_cells / math.prod(G.torsion_orders)
    return max(2, min(P.grid_max, int(per ** (1.0 / G.rank))))


def _auto_bound_K(seq: SequenceSpec, K: int, N_cap: int) -> int:
    """Longest truncation whose Lipschitz slack stays below 1/4 at the finest grid."""
    best, M = 0, 0
    for k, g in enumerate(itertools.islice(iter_terms(seq), K)):
        M = max(M, g.norm1())
        if math.pi * M / N_cap > 0.25:
            break
        best = k + 1
    return max(best, len(seq.prefix) + 1)


def min_sampled_separation(seq: SequenceSpec, K: int, delta: float, samples: int = 20000, seed: int = 0) -> float:
    """Uncertified estimate of the truncated separation constant by random sampling."""
    G = seq.ambient
    rng = np.random.default_rng(seed)
    d = G.rank
    terms = seq.terms(K)
    th = rng.random((samples, d))
    th = th[np.all(np.minimum(th, 1 - th) >= delta, axis=1)] if d else th
    Fm = np.zeros(len(th))
    for g in terms:
        v = np.array([g.coord(j) for j in range(d)], dtype=float)
        Fm = np.maximum(Fm, 2 * np.abs(np.sin(np.pi * ((th @ v) % 1.0))))
    return float(Fm.min()) if len(Fm) else float("nan")

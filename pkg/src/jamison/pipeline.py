"""Dispatch a ProblemSpec to the analysis modules and collect a Report."""

from __future__ import annotations

import itertools
import time

import numpy as np

from .characters import Character, certified_max_fold, chord, d_metric
from .criterion import (
    SeparationReport,
    Verdict,
    VerdictPolicy,
    _auto_bound_K,
    _grid_cap,
    augment_to_generating,
    extract_separated_family,
    generated_lattice,
    jamison_verdict,
    rational_scan,
    separation_lower_bound,
    witness_search,
)
from .errors import BudgetExceeded, InfiniteIndex, InsufficientSupport, NotCertifiable, ResolutionInsufficient
from .groups import INFINITE, Enumeration, subgroup_index
from .renorm import (
    CharacterCombination,
    continuity_probe,
    eigencharacter_separation,
    star_norm,
    translation_star_check,
)
from .report import Report, cache_load, cache_store, spec_hash
from .sequences import ExplicitList, residue_orbit
from .specfile import Policy, ProblemSpec, emit_spec
from .tree import build_character_tree, gap_chain_generate
from .weights import subinvariance_check, translation_norm, weight_table


def verdict_policy(p: Policy) -> VerdictPolicy:
    return VerdictPolicy(
        K=p.K,
        eps_levels=p.eps_levels,
        q_max=p.q_max,
        max_bits=p.max_bits,
        grid=p.grid,
        grid_max=p.grid_max,
        max_cells=p.max_cells,
        delta=p.delta,
        bound_K=p.bound_K,
    )


def _witness(rep: SeparationReport) -> dict:
    return {
        "character": rep.witness,
        "value": rep.metric.value,
        "fold": rep.metric.fold,
        "certified": rep.metric.certified,
        "target": rep.epsilon,
        "scope": rep.scope,
    }


def _lower(rep: SeparationReport | None) -> dict | None:
    if rep is None:
        return None
    return {
        "value": rep.lower_bound,
        "certified": rep.lower_bound is not None,
        "grid": rep.grid,
        "delta": rep.delta,
        "K": rep.K,
        "observed_min": rep.observed_min,
        "slack": rep.slack,
        "argmin": list(rep.argmin or ()),
        "trace": rep.trace,
        "scope": rep.scope,
    }


def _verdict_result(v: Verdict) -> dict:
    return {
        "verdict": v.kind,
        "certified": v.kind != "Empirical",
        "epsilon": v.epsilon,
        "index": "infinite" if v.index == INFINITE else v.index,
        "annihilator": v.annihilator_kind,
        "witnesses": [_witness(w) for w in v.witnesses],
        "lower_bound": _lower(v.lower_bound),
        "scope": v.scope,
        "tags": v.tags,
    }, list(v.caveats)


# ----------------------------------------------------------------- tasks


def _task_verdict(spec: ProblemSpec):
    return (*_verdict_result(jamison_verdict(spec.sequence, verdict_policy(spec.policy))), {})


def _task_epsilon(spec: ProblemSpec):
    P, seq = spec.policy, spec.sequence
    caveats: list[str] = []
    lat = generated_lattice(seq, P.K)
    index = subgroup_index(lat)
    if index == INFINITE:
        raise InfiniteIndex("the sequence spans an infinite-index subgroup; no positive separation")
    aug = augment_to_generating(seq, P.K) if index > 1 else seq
    levels = []
    for m in range(1, P.eps_levels + 1):
        eps = 2.0**-m
        try:
            rep = witness_search(aug, eps, q_max=P.q_max, max_bits=P.max_bits, K=P.K)
        except BudgetExceeded as e:
            caveats.append(f"eps=2^-{m}: {e}")
            break
        levels.append({"m": m, "epsilon": eps, "witness": _witness(rep) if rep else None})
    result: dict = {"index": index, "levels": levels, "lower_bound": None}
    if P.lower_bound and not aug.ambient.countable:
        N_cap = _grid_cap(aug, verdict_policy(P))
        bk = P.bound_K or _auto_bound_K(aug, P.K, N_cap)
        try:
            lb = separation_lower_bound(aug, bk, min(P.grid, N_cap), P.delta, P.max_cells)
            result["lower_bound"] = _lower(lb)
            result["epsilon"] = lb.lower_bound
        except (ResolutionInsufficient, BudgetExceeded) as e:
            caveats.append(f"lower bound not certified: {e}")
    if spec.characters:
        chars = list(spec.characters)
        n = len(chars)
        M = [[0.0] * n for _ in range(n)]
        certified = True
        for i, j in itertools.combinations(range(n), 2):
            try:
                v = chord(certified_max_fold(chars[i] / chars[j], aug))
            except (NotCertifiable, BudgetExceeded):
                v, certified = d_metric(chars[i], chars[j], aug, P.K).value, False
            M[i][j] = M[j][i] = v
        eps = 2.0**-P.eps_levels
        fam = extract_separated_family(chars, aug, P.K, eps, metric=lambda a, b: M[chars.index(a)][chars.index(b)])
        result["pairwise"] = {"certified": certified, "family_epsilon": eps, "family": fam}
        return result, caveats, {"pairwise": _matrix_csv(M)}
    return result, caveats, {}


def _matrix_csv(M) -> str:
    n = len(M)
    rows = [",".join(["i"] + [str(j) for j in range(n)])]
    rows += [",".join([str(i)] + [repr(float(x)) for x in M[i]]) for i in range(n)]
    return "\n".join(rows) + "\n"


def _default_radius(G, N: int) -> int:
    enum = Enumeration(G)
    return max(4, 2 * max(max((abs(v) for _, v in enum.h(n).free), default=0) for n in range(1, N + 1)))


def _task_weight(spec: ProblemSpec):
    P, G = spec.policy, spec.group
    radius = P.radius or _default_radius(G, P.N)
    enum = Enumeration(G)
    wt = weight_table(enum, P.N, radius, P.exact, window=P.window)
    deficit = wt.deficit()
    bound = 2.0**-P.N
    first = []
    for n in range(1, min(20, P.N) + 1):
        h = enum.h(n)
        if wt.contains(h):
            lo = wt.lower(h)
            first.append({"n": n, "element": h, "lower": lo, "floor": 2.0 ** -(n + 1), "holds": lo >= 2.0 ** -(n + 1)})
    caveats = []
    norms = []
    for k in range(1, P.shifts + 1):
        try:
            t = translation_norm(wt, k, P.m_max)
            norms.append({"k": k, "value": t.value, "upper": t.upper, "bound": t.bound, "holds": t.holds, "matrix_norm": t.matrix_norm})
        except (InsufficientSupport, BudgetExceeded) as e:
            caveats.append(f"translation norm k={k}: {e}")
    subs = []
    for l in range(1, P.subinvariance + 1):
        try:
            r = subinvariance_check(wt, l)
            subs.append(
                {"l": l, "max_ratio": r.max_ratio, "upper": r.max_ratio_upper, "bound": r.bound, "holds": r.holds,
                 "strict_bound": r.strict_bound, "strict_holds": r.strict_holds, "pairs": r.pairs}
            )
        except InsufficientSupport as e:
            caveats.append(f"subinvariance l={l}: {e}")
    holds = (
        (deficit <= bound if wt.exact else True)
        and all(x["holds"] for x in first)
        and all(x["holds"] for x in norms)
        and all(x["holds"] for x in subs)
    )
    if not wt.exact:
        caveats.append("float table: the deficit is an upper bound, not exact")
    result = {
        "N": P.N,
        "radius": radius,
        "exact": wt.exact,
        "enumeration": wt.enumeration,
        "deficit": deficit,
        "deficit_bound": bound,
        "tail": wt.tail,
        "first_weights": first,
        "translation_norms": norms,
        "subinvariance": subs,
        "holds": holds,
    }
    return result, caveats, {"weights": wt.to_csv()}


def _task_repnorm(spec: ProblemSpec):
    P, seq = spec.policy, spec.sequence
    rng = np.random.default_rng(spec.seed)
    caveats: list[str] = []
    chars = list(spec.characters)
    singles = []
    for chi in chars:
        s = star_norm(chi, seq, P.K, P.J)
        checks = [translation_star_check(chi, seq, p, P.K, P.J) for p in range(P.p_max)]
        singles.append(
            {"character": chi, "star": s.upper, "exact": s.exact, "worst_ratio": max(c.ratio for c in checks),
             "translation_holds": all(c.holds for c in checks)}
        )
    result: dict = {"characters": singles}
    wt = None
    if spec.coefficients and len(chars) > 1:
        radius = P.radius or _default_radius(seq.ambient, P.N)
        wt = weight_table(Enumeration(seq.ambient), P.N, radius, False, window=P.window)
        f = CharacterCombination(tuple(zip(spec.coefficients, chars)))
        s = star_norm(f, seq, P.K, P.J, wt, rng=rng)
        checks = [translation_star_check(f, seq, p, min(P.K, 8), P.J, wt) for p in range(P.p_max)]
        result["combination"] = {
            "lower": s.lower, "upper": s.upper, "norm": list(s.norm), "closure": list(s.closure), "tuples": s.tuples,
            "worst_ratio": max(c.ratio for c in checks), "translation_holds": all(c.holds for c in checks),
        }
        caveats.append("combination star norm: lower bound from tuples over the first K terms, upper bound analytic")
    pairs = []
    for a, b in itertools.combinations(chars, 2):
        e = eigencharacter_separation(a, b, seq, P.M, P.K, wt)
        c = continuity_probe(a, b, seq, P.K, min(P.J, 4), spec.points)
        pairs.append(
            {"pair": [a, b], "separation_bound": e.bound, "d": e.d, "certified_d": e.certified_d, "measured": e.measured,
             "eigen_holds": e.holds, "continuity_holds": c.holds, "levels": c.levels, "coefficient_checks": c.coefficient_checks}
        )
    result["pairs"] = pairs
    result["holds"] = all(s["translation_holds"] for s in singles) and all(p["eigen_holds"] and p["continuity_holds"] for p in pairs)
    return result, caveats, {}


def _task_tree(spec: ProblemSpec):
    P = spec.policy
    chain = gap_chain_generate(spec.sequence, P.depth, K=P.K, q_max=P.q_max, max_bits=P.max_bits)
    tree = build_character_tree(chain)
    fams = []
    for p in range(1, P.depth + 1):
        eps = 7 / 6 * chain.links[p - 1].gap * (1 + 1e-9)
        size = len(tree.separated_family(eps))
        fams.append({"p": p, "epsilon": eps, "size": size, "bound": 2**p, "holds": size <= 2**p})
    result = {
        "depth": P.depth,
        "chain": [{"n": l.n, "character": l.character, "d_one": chord(l.fold_one), "gap": l.gap, "fold_gap": l.fold_conj} for l in chain.links],
        "pairs": tree.pairs,
        "violations": tree.violations,
        "min_separation": tree.min_separation(),
        "families": fams,
        "holds": not tree.violations and all(f["holds"] for f in fams),
        "summary": chain.checks,
    }
    return result, [], {"separation": tree.to_csv()}


def _task_oracle(spec: ProblemSpec):
    P, seq = spec.policy, spec.sequence
    caveats = []
    orbits = []
    for q in P.moduli:
        coords = None
        if seq.ambient.countable:
            coords = tuple(range(P.window or 1))
        o = residue_orbit(seq, q, coords)
        orbits.append({"modulus": q, "size": len(o.residues), "residues": sorted(o.residues), "certificate": o.certificate})
    result: dict = {"orbits": orbits}
    idx = subgroup_index(generated_lattice(seq, P.K))
    result["index"] = idx
    result["metric"] = "distance" if idx == 1 else "pseudo-metric"
    if idx != 1:
        caveats.append(f"the first {P.K} terms span a subgroup of index {idx}: d does not separate its annihilator")
    if not isinstance(seq.body, ExplicitList) or seq.body.exhaustive:
        try:
            s = rational_scan(seq, P.q_max)
            result["scan"] = {"q_max": P.q_max, "min_fold": s.min_fold, "min_value": s.min_value,
                              "minimizers": [f"{p}/{q}" for p, q in s.minimizers[:50]], "evaluated": s.evaluated}
        except (BudgetExceeded, NotCertifiable) as e:
            caveats.append(f"scan: {e}")
    ds = []
    for chi in spec.characters:
        try:
            f = certified_max_fold(chi, seq)
            ds.append({"character": chi, "d_one": chord(f), "fold": f, "certified": True})
        except (NotCertifiable, BudgetExceeded) as e:
            ds.append({"character": chi, "d_one": d_metric(chi, Character.trivial(seq.ambient), seq, P.K).value, "certified": False})
            caveats.append(f"{chi}: {e}")
    result["distances"] = ds
    return result, caveats, {}


TASKS = {
    "verdict": _task_verdict,
    "epsilon": _task_epsilon,
    "weight": _task_weight,
    "repnorm": _task_repnorm,
    "tree": _task_tree,
    "oracle": _task_oracle,
}


def environment(spec: ProblemSpec) -> dict:
    from dataclasses import asdict

    return {
        "group": spec.group.label(),
        "sequence": spec.sequence.describe(),
        "enumeration": Enumeration.name,
        "budgets": {k: v for k, v in asdict(spec.policy).items() if v is not None},
    }


def run_pipeline(spec: ProblemSpec, use_cache: bool = True) -> Report:
    """Run the task; with JAMISON_CACHE_DIR set, identical (spec, seed, version) is served from the cache."""
    key = spec_hash(emit_spec(spec), spec.seed)
    if use_cache:
        hit = cache_load(key)
        if hit is not None:
            return hit
    t0 = time.perf_counter()
    result, caveats, tables = TASKS[spec.task](spec)
    rep = Report(key, spec.task, spec.seed, environment(spec), result, caveats, tables)
    rep.timing = time.perf_counter() - t0
    if use_cache:
        cache_store(rep)
    return rep

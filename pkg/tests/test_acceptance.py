"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

from __future__ import annotations

import dataclasses
import math
import random
from fractions import Fraction

import numpy as np
import sympy

from jamison.characters import Character, certified_le, certified_max_fold, chord_interval
from jamison.cli import main
from jamison.criterion import jamison_verdict, rational_scan
from jamison.groups import Enumeration, GroupDescriptor, annihilator, lattice_of, subgroup_index, INFINITE
from jamison.pipeline import run_pipeline
from jamison.renorm import GramModel, _closure, CharacterCombination, continuity_probe, star_norm, translation_star_check
from jamison.report import canonical_json
from jamison.sequences import (
    AllElements,
    CanonicalBasis,
    DoubleExponential,
    ExplicitList,
    Geometric,
    Polynomial,
    SequenceSpec,
)
from jamison.specfile import parse_spec
from jamison.tree import build_character_tree, gap_chain_generate
from jamison.weights import subinvariance_check, translation_norm, weight_table

Z = GroupDescriptor(1, ())
F = Fraction


def test_full_integer_sequence_separation(verdict_line):
    seq = SequenceSpec(Z, AllElements())
    scan = rational_scan(seq, 1000)
    qs = {q for _, q in scan.minimizers}
    # independent check on small q: brute force over the first 2q integers
    for q in range(2, 40):
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                brute = max(min(p * n % q, q - p * n % q) for n in range(2 * q))
                assert F(brute, q) >= scan.min_fold
    ok = abs(scan.min_value - math.sqrt(3)) <= 1e-12 and qs == {3} and scan.min_value > 1
    verdict_line(1, ok, f"min d(chi,1) over p/q, q<=1000: {scan.min_value:.15f} (sqrt3 = {math.sqrt(3):.15f}), attained at q in {sorted(qs)}")
    assert ok


def test_double_exponential_is_not_separating(verdict_line):
    v = jamison_verdict(SequenceSpec(Z, DoubleExponential(2)))
    ok = v.kind == "NotJamison_SeparationFails" and len(v.witnesses) == 6
    details = []
    for m, w in enumerate(v.witnesses, start=1):
        ok &= w.certified and certified_le(chord_interval(w.metric.fold), 2.0**-m) and w.metric.value < 2.0**-m
        details.append(f"m={m}:{w.witness}")
    k4 = [w for w in v.witnesses if w.witness == Character.of(Z, [F(1, 2**16)])]
    ok &= bool(k4) and k4[0].metric.fold == F(1, 256) and abs(k4[0].metric.value - 2 * math.sin(math.pi / 256)) <= 1e-12
    verdict_line(2, ok, f"{v.kind}; witnesses {' '.join(details)}; 1/2^16 gives {k4[0].metric.value:.15f}")
    assert ok


def test_infinite_index_branch(verdict_line):
    Z2 = GroupDescriptor(2, ())
    Zoo = GroupDescriptor("countable", ())
    cases = [
        SequenceSpec(Z2, ExplicitList((Z2.element([1, 1]),))),
        SequenceSpec(Zoo, CanonicalBasis(1)),
        SequenceSpec(Zoo, CanonicalBasis(4)),
        SequenceSpec(Zoo, ExplicitList((Zoo.element({0: 1, 1: 1}), Zoo.element({2: 1})))),
        SequenceSpec(Zoo, Geometric(1, 2), coordinate=3),
    ]
    ok = True
    for seq in cases:
        v = jamison_verdict(seq)
        ok &= v.kind == "NotJamison_InfiniteIndex" and v.annihilator_kind == "PositiveDimensional"
    rng = random.Random(11)
    G3 = GroupDescriptor(3, ())
    deficient = 0
    while deficient < 100:
        r1 = [rng.randint(-5, 5) for _ in range(3)]
        r2 = [rng.randint(-5, 5) for _ in range(3)]
        a, b = rng.randint(-3, 3), rng.randint(-3, 3)
        rows = [r1, r2, [a * x + b * y for x, y in zip(r1, r2)]]
        rng.shuffle(rows)
        assert sympy.Matrix(rows).rank() < 3
        lat = lattice_of([G3.element(r) for r in rows], G3)
        ok &= subgroup_index(lat) == INFINITE and annihilator(lat).kind == "PositiveDimensional"
        deficient += 1
    verdict_line(3, ok, f"{len(cases)} named specs and {deficient} rank-deficient 3x3 sets classified infinite index")
    assert ok


def _brute_index(rows: list[list[int]], D: int) -> int:
    """[Z^n : L] = D^n / |L / D Z^n| with L / D Z^n found by closure in (Z/D)^n."""
    n = len(rows[0])
    gens = [tuple(x % D for x in r) for r in rows]
    seen = {(0,) * n}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple((a + b) % D for a, b in zip(x, g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return D**n // len(seen)


def test_index_and_annihilator_exactness(verdict_line):
    rng = random.Random(5)
    ok, done = True, 0
    for n in (2, 3):
        G = GroupDescriptor(n, ())
        count = 0
        while count < 100:
            rows = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(n)]
            D = abs(int(sympy.Matrix(rows).det()))
            if D == 0:
                continue
            lat = lattice_of([G.element(r) for r in rows], G)
            idx = subgroup_index(lat)
            ann = annihilator(lat).elements()
            kills = all(sum(a * x for a, x in zip(theta, r)) % 1 == 0 for theta in ann for r in rows)
            ok &= idx == _brute_index(rows, D) and len(ann) == idx == len(set(ann)) and kills
            count += 1
            done += 1
    verdict_line(4, ok, f"{done} full-rank matrices: index = brute-force coset count = |annihilator|")
    assert ok


def test_weight_and_operator_bounds(verdict_line):
    enum = Enumeration(Z)
    exact = weight_table(enum, 30, 40, exact=True)
    deficit_ok = exact.deficit() <= F(1, 2**30)
    first_ok = all(exact.lower(enum.h(n)) >= F(1, 2 ** (n + 1)) for n in range(1, 21))
    sub = [subinvariance_check(exact, l) for l in range(1, 7)]
    sub_ok = all(r.holds for r in sub)
    big = weight_table(enum, 260, 400, exact=False)
    norms = [translation_norm(big, k, m_max=200) for k in range(1, 9)]
    norm_ok = all(t.holds for t in norms) and all(abs(t.matrix_norm - t.diag_max) < 1e-9 for t in norms)
    ok = deficit_ok and first_ok and sub_ok and norm_ok
    detail = (
        f"deficit={exact.deficit()} ; w(h_n)>=2^-(n+1) n<=20: {first_ok} ; "
        f"translation k<=8: {', '.join(f'{t.upper:.4f}<={t.bound:.4f}' for t in norms)} ; "
        f"subinvariance l<=6: {', '.join(f'{r.max_ratio_upper:.3f}<={r.bound:g}' for r in sub)}"
        f" (sqrt form holds for l<={max([r.shift_index for r in sub if r.strict_holds], default=0)})"
    )
    verdict_line(5, ok, detail)
    assert ok


def test_renorming_bounds(verdict_line):
    rng = np.random.default_rng(2024)
    seq = SequenceSpec(Z, Geometric(1, 2))
    wt = weight_table(Enumeration(Z), 60, 120, exact=False)
    chars = [Character.of(Z, [F(int(rng.integers(1, q)), int(q))]) for q in rng.integers(2, 500, size=50)]
    ok, worst_slack = True, math.inf
    for chi in chars:
        s = star_norm(chi, seq, 12, 3)
        ok &= s.exact and s.lower == s.upper == 1.0
        # the table reproduces ||chi|| = 1 and every enumerated level stays below it
        gram = GramModel(wt, [chi])
        lo, hi = gram.norm_bounds(np.array([1.0 + 0j]))
        f = CharacterCombination.of([(1, chi)])
        _, clo_hi, _ = _closure(f, gram, seq.terms(12), 3, 10**5, None)
        ok &= lo <= 1.0 <= hi and clo_hi <= hi
    for chi in chars:
        for p in range(100):
            c = translation_star_check(chi, seq, p, 12, 3)
            ok &= c.holds
            worst_slack = min(worst_slack, c.slack)
    combo_ratio = 0.0
    for _ in range(10):
        cs = [Character.of(Z, [F(int(rng.integers(1, 97)), 97)]) for _ in range(3)]
        f = CharacterCombination.of(zip(rng.normal(size=3) + 1j * rng.normal(size=3), cs))
        for p in range(5):
            c = translation_star_check(f, seq, p, 6, 1, wt)
            ok &= c.holds
            combo_ratio = max(combo_ratio, c.ratio)
    verdict_line(6, ok, f"50 characters with ||chi||_* = ||chi|| = 1; rho(g_p), p<100: min slack {worst_slack:g} (ratio 1 <= 3); "
                 f"3-term combinations: worst truncated ratio {combo_ratio:.3f} <= 3")
    assert ok


def test_character_tree(verdict_line):
    chain = gap_chain_generate(SequenceSpec(Z, DoubleExponential(2)), 6)
    tree = build_character_tree(chain)
    fam = []
    for p in range(1, 7):
        eps = 7 / 6 * chain.links[p - 1].gap * (1 + 1e-9)
        fam.append(len(tree.separated_family(eps)) <= 2**p)
    Ks = [int(math.log2(math.log2(l.character.denominator))) for l in chain.links]
    ok = tree.pairs == 2016 and not tree.violations and all(fam)
    verdict_line(7, ok, f"chain K_n = {Ks}; {tree.pairs} leaf pairs, {len(tree.violations)} violations of 5/6 or 7/6; families <= 2^p: {all(fam)}")
    assert ok


def test_metric_laws_and_inequality_chain(verdict_line):
    rng = random.Random(8)
    seq = SequenceSpec(Z, Polynomial((1, 1)))
    ok = True
    for _ in range(1000):
        x, y, z = (Character.of(Z, [F(rng.randint(0, 59), 60)]) for _ in range(3))
        dxy, dyz, dxz = (chord_interval(certified_max_fold(a / b, seq)) for a, b in ((x, y), (y, z), (x, z)))
        ok &= certified_le(dxz, dxy + dyz) or not (dxz > dxy + dyz)
    tri = ok
    geo = SequenceSpec(Z, Geometric(1, 2))
    worst = math.inf
    for _ in range(12):
        chi, phi = (Character.of(Z, [F(rng.randint(0, 99), 100)]) for _ in range(2))
        r = continuity_probe(chi, phi, geo, 4, 6)
        ok &= r.holds
        worst = min([worst] + [min(l["recursion_slack"], l["induction_slack"]) for l in r.levels])
    enum = Enumeration(Z)
    cases = 0
    for n in range(1, 21):
        for _ in range(5):
            chi, phi = (Character.of(Z, [F(rng.randint(0, 199), 200)]) for _ in range(2))
            r = continuity_probe(chi, phi, geo, 6, 0, cases=[enum.h(n)])
            ok &= r.coefficient_checks[0]["holds"]
            cases += 1
    verdict_line(8, ok, f"triangle on 1000 exact triples: {tri}; level recursion j<=6 min slack {worst:.3g}; word-length bound on {cases} cases")
    assert ok


def test_doubling_family_consistency(verdict_line):
    seq = SequenceSpec(Z, Geometric(1, 2))
    scan = rational_scan(seq, 1000, q_min=3, odd_only=True)
    qs = {q for _, q in scan.minimizers}
    ok = abs(scan.min_value - math.sqrt(3)) <= 1e-12 and qs == {3} and (1, 3) in scan.minimizers
    ok &= seq.bounded_ratio() is True
    verdict_line(9, ok, f"(2^k), odd q<=1000: min d = {scan.min_value:.15f} at {sorted(scan.minimizers)}; bounded-ratio tag {seq.bounded_ratio()}")
    assert ok


def test_reproducibility(verdict_line, tmp_path, monkeypatch):
    from pathlib import Path

    fix = Path(__file__).parent / "fixtures"
    spec = parse_spec(fix / "verdict_double_exp.toml")
    a, b = canonical_json(run_pipeline(spec)), canonical_json(run_pipeline(spec))
    monkeypatch.setenv("JAMISON_CACHE_DIR", str(tmp_path / "cache"))
    outs = []
    for i in range(2):
        assert main(["verdict", "--spec", str(fix / "verdict_double_exp.toml"), "--out", str(tmp_path / f"o{i}")]) == 0
        outs.append((tmp_path / f"o{i}" / "report.json").read_bytes())
    hit = run_pipeline(spec)
    weight = parse_spec(fix / "repnorm_z.toml")
    w1, w2 = canonical_json(run_pipeline(weight, use_cache=False)), canonical_json(run_pipeline(dataclasses.replace(weight), use_cache=False))
    ok = a == b and outs[0] == outs[1] == a.encode() and hit.cached and w1 == w2
    verdict_line(10, ok, f"byte-identical reruns: {a == b and w1 == w2}; CLI files identical: {outs[0] == outs[1]}; cache hit: {hit.cached}")
    assert ok

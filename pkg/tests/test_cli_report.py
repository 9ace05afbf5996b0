from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from jamison.cli import main
from jamison.pipeline import run_pipeline
from jamison.report import canonical_json, emit_report, text_summary
from jamison.specfile import parse_spec

FIX = Path(__file__).parent / "fixtures"


def test_canonical_json_formatting():
    s = canonical_json({"b": 0.1, "a": Fraction(2, 6), "c": [1.0, float("inf")], "d": True})
    assert s.splitlines()[1].startswith('  "a": "1/3"')
    assert '"b": 0.10000000000000001' in s
    assert '[1.0, "inf"]' in s


def test_verdict_report_schema():
    rep = run_pipeline(parse_spec(FIX / "verdict_double_exp.toml"))
    data = json.loads(canonical_json(rep))
    assert data["result"]["verdict"] == "NotJamison_SeparationFails"
    assert len(data["result"]["witnesses"]) == 6
    assert all(w["certified"] for w in data["result"]["witnesses"])
    assert data["environment"]["budgets"]["eps_levels"] == 6
    assert data["result"]["witnesses"][0]["character"]["angles"] == [[0, "1/256"]]
    assert data["result"]["witnesses"][-1]["character"]["angles"] == [[0, "1/4294967296"]]


def test_weight_report():
    rep = run_pipeline(parse_spec(FIX / "weight_z.toml"))
    assert rep.result["exact"] and rep.result["deficit"] == Fraction(1, 2**30)
    assert rep.result["holds"]


def test_tree_matrix_shape(tmp_path):
    rep = run_pipeline(parse_spec(FIX / "tree_depth4.toml"))
    files = emit_report(rep, tmp_path, "csv")
    rows = (tmp_path / "separation.csv").read_text().strip().splitlines()
    assert len(rows) == 17 and all(len(r.split(",")) == 17 for r in rows)
    assert tmp_path / "summary.csv" in files


def test_text_summary_carries_caveats():
    rep = run_pipeline(parse_spec(FIX / "repnorm_z.toml"))
    txt = text_summary(rep)
    for c in rep.caveats:
        assert c in txt


def test_determinism_and_cache(tmp_path, monkeypatch):
    spec = parse_spec(FIX / "verdict_double_exp.toml")
    a = canonical_json(run_pipeline(spec))
    b = canonical_json(run_pipeline(spec))
    assert a == b
    monkeypatch.setenv("JAMISON_CACHE_DIR", str(tmp_path / "cache"))
    first = run_pipeline(spec)
    hit = run_pipeline(spec)
    assert not first.cached and hit.cached
    assert canonical_json(hit) == canonical_json(first) == a


def test_cache_key_changes_with_policy_and_seed(tmp_path, monkeypatch):
    import dataclasses

    spec = parse_spec(FIX / "verdict_all.toml")
    monkeypatch.setenv("JAMISON_CACHE_DIR", str(tmp_path))
    a = run_pipeline(spec)
    b = run_pipeline(dataclasses.replace(spec, seed=1))
    c = run_pipeline(dataclasses.replace(spec, policy=dataclasses.replace(spec.policy, K=32)))
    assert len({a.spec_hash, b.spec_hash, c.spec_hash}) == 3
    assert not b.cached and not c.cached


@pytest.mark.parametrize("fmt, name", [("json", "report.json"), ("text", "report.txt"), ("csv", "summary.csv")])
def test_cli_formats(tmp_path, capsys, fmt, name):
    code = main(["verdict", "--spec", str(FIX / "verdict_all.toml"), "--out", str(tmp_path), "--format", fmt, "--no-cache"])
    assert code == 0
    assert (tmp_path / name).exists()


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[group]\nfree_rank = 1\ntorsion = [1]\n[sequence]\nfamily = "all"\n')
    assert main(["verdict", "--spec", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["verdict", "--spec", str(tmp_path / "missing.toml")]) == 4
    budget = tmp_path / "budget.toml"
    budget.write_text('[group]\nfree_rank = 3\n[sequence]\nfamily = "all"\n[policy]\nN = 10\nradius = 200\n')
    assert main(["weight", "--spec", str(budget), "--no-cache"]) == 3
    nochain = tmp_path / "nochain.toml"
    nochain.write_text('[group]\nfree_rank = 1\n[sequence]\nfamily = "polynomial"\n[policy]\nq_max = 30\ndepth = 2\n')
    assert main(["tree", "--spec", str(nochain), "--no-cache"]) == 4


def test_cli_stdout_json(capsys):
    assert main(["oracle", "--spec", str(FIX / "oracle_torsion.toml"), "--no-cache"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["result"]["distances"][0]["certified"]
    assert data["result"]["orbits"][0]["modulus"] == 6


def test_seed_override(capsys):
    assert main(["verdict", "--spec", str(FIX / "verdict_all.toml"), "--seed", "5", "--no-cache"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 5


def test_oracle_flags_pseudo_metric():
    from jamison.specfile import parse_spec_text

    spec = parse_spec_text('task = "oracle"\n[group]\nfree_rank = 1\n[sequence]\nfamily = "geometric"\nc = 2\nratio = 2\n')
    r = run_pipeline(spec, use_cache=False)
    assert r.result["index"] == 2 and r.result["metric"] == "pseudo-metric"
    assert any("index 2" in c for c in r.caveats)
    full = run_pipeline(parse_spec(FIX / "oracle_torsion.toml"), use_cache=False)
    assert full.result["metric"] == "distance"

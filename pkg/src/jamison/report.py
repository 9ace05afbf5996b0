"""Reports: canonical JSON, CSV tables, text summaries and the result cache.

Canonical JSON has sorted keys, floats with 17 significant digits and
exact rationals as "p/q" strings. Wall-clock timing goes to a sidecar file
so that the canonical bytes depend only on (spec, seed, version).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .characters import Character
from .groups import GroupElement

FORMAT_VERSION = 1
CACHE_ENV = "JAMISON_CACHE_DIR"


@dataclass
class Report:
    spec_hash: str
    task: str
    seed: int
    environment: dict
    result: dict
    caveats: list[str] = field(default_factory=list)
    tables: dict[str, str] = field(default_factory=dict)  # name -> CSV text
    timing: float | None = None
    cached: bool = False

    def payload(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "version": __version__,
            "spec_hash": self.spec_hash,
            "task": self.task,
            "seed": self.seed,
            "environment": self.environment,
            "result": self.result,
            "caveats": self.caveats,
            "tables": sorted(self.tables),
        }


# ------------------------------------------------------------------- JSON


def plain(x: Any) -> Any:
    """Convert results into JSON-ready values (rationals stay exact strings)."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Character):
        return {"angles": [[i, plain(a)] for i, a in x.angles], "torsion": list(x.torsion)}
    if isinstance(x, GroupElement):
        return {"free": [list(p) for p in x.free], "torsion": list(x.torsion)}
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [plain(v) for v in x]
        return sorted(items, key=lambda v: json.dumps(v, sort_keys=True)) if isinstance(x, (set, frozenset)) else items
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _dump(x: Any, indent: int) -> str:
    pad, inner = " " * indent, " " * (indent + 2)
    if isinstance(x, float):
        return _float(x)
    if isinstance(x, dict):
        if not x:
            return "{}"
        body = ",\n".join(f"{inner}{json.dumps(k)}: {_dump(x[k], indent + 2)}" for k in sorted(x))
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_dump(v, 0) for v in x) + "]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 2) for v in x) + "\n" + pad + "]"
    return json.dumps(x)


def canonical_json(obj: Any) -> str:
    if isinstance(obj, Report):
        obj = obj.payload()
    return _dump(plain(obj), 0) + "\n"


def spec_hash(canonical_spec: str, seed: int) -> str:
    h = hashlib.sha256()
    h.update(canonical_spec.encode())
    h.update(f"\0{__version__}\0{FORMAT_VERSION}\0{seed}".encode())
    return h.hexdigest()


# ------------------------------------------------------------------- text


def text_summary(report: Report) -> str:
    r = report.result
    lines = [f"task: {report.task}", f"spec: {report.spec_hash[:16]}", f"seed: {report.seed}"]
    for key in ("verdict", "epsilon", "index", "scope", "holds"):
        if key in r:
            v = r[key]
            lines.append(f"{key}: {_float(v).strip(chr(34)) if isinstance(v, float) else v}")
    if "summary" in r:
        lines += [f"  {s}" for s in r["summary"]]
    if report.caveats:
        lines.append("caveats:")
        lines += [f"  - {c}" for c in report.caveats]
    if report.tables:
        lines.append("tables: " + ", ".join(sorted(report.tables)))
    return "\n".join(lines) + "\n"


def summary_csv(report: Report) -> str:
    rows = ["key,value"]
    for k in sorted(report.result):
        v = report.result[k]
        if isinstance(v, (dict, list)):
            continue
        s = _float(v).strip('"') if isinstance(v, float) else str(plain(v))
        rows.append(f"{k},{json.dumps(s) if ',' in s else s}")
    return "\n".join(rows) + "\n"


def emit_report(report: Report, out_dir: str | Path, fmt: str = "json") -> list[Path]:
    """Write the report; returns the files written.

    json: report.json (+ timing sidecar); csv: every table plus summary.csv;
    text: report.txt.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    if fmt == "json":
        put("report.json", canonical_json(report))
        put("report.timing.json", json.dumps({"seconds": report.timing, "cached": report.cached}) + "\n")
    elif fmt == "csv":
        for name, body in sorted(report.tables.items()):
            put(f"{name}.csv", body)
        put("summary.csv", summary_csv(report))
    elif fmt == "text":
        put("report.txt", text_summary(report))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return written


# ------------------------------------------------------------------ cache


def cache_dir() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def cache_load(key: str) -> Report | None:
    d = cache_dir()
    if d is None or not (d / f"{key}.json").exists():
        return None
    entry = json.loads((d / f"{key}.json").read_text(encoding="utf-8"))
    tables = {name: (d / f"{key}.{name}.csv").read_text(encoding="utf-8") for name in entry["tables"]}
    rep = Report(entry["spec_hash"], entry["task"], entry["seed"], entry["environment"], entry["result"], entry["caveats"], tables)
    rep.cached = True
    return rep


def cache_store(report: Report) -> None:
    d = cache_dir()
    if d is None:
        return
    d.mkdir(parents=True, exist_ok=True)
    key = report.spec_hash
    for name, body in report.tables.items():
        (d / f"{key}.{name}.csv").write_text(body, encoding="utf-8")
    tmp = d / f"{key}.json.tmp"
    tmp.write_text(canonical_json(report), encoding="utf-8")
    os.replace(tmp, d / f"{key}.json")

"""Command line: ``jamison <task> --spec FILE [--out DIR] [--format F] [--seed S]``.

Exit status: 0 success, 2 invalid spec, 3 budget exhausted, 4 anything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import JamisonError
from .pipeline import run_pipeline
from .report import emit_report, text_summary
from .specfile import TASKS, parse_spec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jamison", description="Character separation along sequences in abelian groups.")
    sub = ap.add_subparsers(dest="task", required=True)
    helps = {
        "verdict": "decide whether the sequence separates characters uniformly",
        "epsilon": "witnesses for eps = 2^-m and a certified separation lower bound",
        "weight": "weight table, translation norms and sub-invariance ratios",
        "repnorm": "renorming, eigencharacter separation and continuity checks",
        "tree": "gap chain and binary character tree with the separation sandwich",
        "oracle": "residue orbits, rational scan and certified distances",
    }
    for t in TASKS:
        p = sub.add_parser(t, help=helps[t])
        p.add_argument("--spec", required=True, type=Path, help="TOML problem spec")
        p.add_argument("--out", type=Path, default=None, help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--seed", type=int, default=None, help="override the spec seed")
        p.add_argument("--no-cache", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = parse_spec(args.spec)
        if spec.task != args.task:
            spec = dataclasses.replace(spec, task=args.task)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        report = run_pipeline(spec, use_cache=not args.no_cache)
        if args.out is None:
            if args.format == "json":
                from .report import canonical_json

                sys.stdout.write(canonical_json(report))
            elif args.format == "csv":
                for name, body in sorted(report.tables.items()):
                    sys.stdout.write(f"# {name}\n{body}")
                if not report.tables:
                    from .report import summary_csv

                    sys.stdout.write(summary_csv(report))
            else:
                sys.stdout.write(text_summary(report))
        else:
            for p in emit_report(report, args.out, args.format):
                print(p)
    except JamisonError as e:
        print(f"jamison: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"jamison: {e}", file=sys.stderr)
        return 4
    except Exception as e:  # internal failure
        print(f"jamison: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

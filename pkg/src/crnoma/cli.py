"""Command-line front end.

    crnoma run SPEC.yaml [--out PATH] [--workers N]
    crnoma preset NAME [--trials N] [--seed S] [--out PATH] [--workers N]
    crnoma analytic SPEC.yaml [--out PATH]
    crnoma list-presets

The default worker count comes from ``CRNOMA_WORKERS`` (1 if unset).
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import experiment
from .analytic import NumericInstabilityError
from .model import InvalidParameterError


def _emit(rows, out: Optional[str]) -> None:
    if out:
        experiment.write_csv_atomic(out, rows)
        print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    else:
        sys.stdout.write(experiment.csv_text(rows))


def _run_spec(spec: experiment.ExperimentSpec, out: Optional[str], workers: Optional[int]) -> int:
    result = experiment.run_experiment(spec, workers=workers)
    out = out or spec.output
    if out:
        experiment.write_csv_atomic(out, result.rows)
        print(experiment.summary_table(result.rows))
        print(f"wrote {len(result.rows)} rows to {out}")
    else:
        sys.stdout.write(experiment.csv_text(result.rows))
    return 0


def cmd_run(args) -> int:
    return _run_spec(experiment.load(args.spec), args.out, args.workers)


def cmd_preset(args) -> int:
    spec = experiment.preset(args.name, trials=args.trials, seed=args.seed, output=args.out)
    return _run_spec(spec, None, args.workers)


def cmd_analytic(args) -> int:
    spec = experiment.load(args.spec)
    _emit(experiment.analytic_only(spec), args.out)
    return 0


def cmd_list_presets(args) -> int:
    for name, spec in experiment.PRESETS.items():
        print(f"# {name}: {spec.note}")
        print(spec.dumps())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crnoma", description="CR-NOMA outage laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment file")
    p.add_argument("spec")
    p.add_argument("--out", help="CSV path (overrides the file's output)")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("preset", help="run a figure preset")
    p.add_argument("name", choices=sorted(experiment.PRESETS))
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("analytic", help="closed forms only, no simulation")
    p.add_argument("spec")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("list-presets", help="print every preset's resolved parameters")
    p.set_defaults(func=cmd_list_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
    except (InvalidParameterError, NumericInstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())

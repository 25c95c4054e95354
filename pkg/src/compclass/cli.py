"""Command-line front end: run experiments, print predictions, verify replays."""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .experiment import predict_report, run_experiment, verify_replay

_WORKERS_ENV = "COMPCLASS_WORKERS"


def _resolve_workers(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get(_WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"ignoring non-integer {_WORKERS_ENV}={env!r}", file=sys.stderr)
    return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compclass",
        description=(
            "Compressive classification experiments: misclassification bounds, "
            "MAP Monte Carlo, and low-noise regime analysis."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment end to end")
    run.add_argument("--config", required=True, help="experiment config file")
    run.add_argument("--trials", type=int, default=None, help="override trials per grid point")
    run.add_argument("--seed", type=int, default=None, help="override the run seed")
    run.add_argument("--workers", type=int, default=None,
                     help=f"worker processes (default 1, or ${_WORKERS_ENV})")
    run.add_argument("--union-bound", choices=["printed", "standard"], default=None,
                     help="union bound variant for L > 2")
    run.add_argument("--out", default=None, help="override the output directory")

    predict = sub.add_parser("predict", help="closed-form regime report, no simulation")
    predict.add_argument("--config", required=True, help="experiment config file")
    predict.add_argument("--seed", type=int, default=None, help="override the run seed")

    verify = sub.add_parser("verify", help="recompute a replay file and compare CSV bytes")
    verify.add_argument("--replay", required=True, help="replay.txt written by a run")
    verify.add_argument("--workers", type=int, default=None, help="worker processes")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "verify":
        ok, messages = verify_replay(args.replay, workers=_resolve_workers(args.workers))
        for message in messages:
            print(message)
        print("replay verification:", "PASS" if ok else "FAIL")
        return 0 if ok else 1

    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "predict":
        cfg = cfg.with_overrides(seed=args.seed)
        print(predict_report(cfg), end="")
        return 0

    cfg = cfg.with_overrides(
        trials=args.trials,
        seed=args.seed,
        union_bound_variant=args.union_bound,
        output_path=args.out,
    )
    result = run_experiment(cfg, workers=_resolve_workers(args.workers))
    for message in result.messages:
        print(message, file=sys.stderr)
    print(f"wrote {len(result.csv_paths)} curves, report.txt, plot.svg, replay.txt "
          f"to {result.out_dir}")
    print("run checks:", "PASS" if result.ok else "FAIL")
    return 0 if result.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())

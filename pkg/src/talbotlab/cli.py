"""Command-line entry point.

One subcommand per experiment; configuration comes from an optional
TOML/JSON file plus repeatable dotted-path overrides, with dedicated
flags for the settings that change most between runs.  Exit codes: 0
success, 2 configuration error, 3 numeric failure, 4 check failure
under --check.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, THREADS_ENV_VAR, load_config, parse_config_dict, apply_overrides
from .errors import ConfigError, TalbotLabError
from .experiments import run, write_result

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="talbotlab",
        description="Periodic Schrodinger evolution: revivals, fractal "
        "dimension, smoothing, and kernel-region experiments.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML or JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, metavar="N",
                        help=f"worker threads (default: ${THREADS_ENV_VAR} or 1)")
    common.add_argument("--seed", type=int, metavar="U64", help="seed override")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted-path config override, repeatable")
    common.add_argument("--check", action="store_true",
                        help="exit 4 when any result check fails")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name.replace("_", "-"), parents=[common],
                       help=f"run the {name.replace('_', ' ')} experiment")
    return parser


def _build_config(args):
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.out is not None:
        overrides.append(f"output={args.out}")
    if args.config:
        return load_config(args.config, overrides=overrides, experiment=args.experiment)
    raw = apply_overrides({}, overrides)
    return parse_config_dict(raw, experiment=args.experiment)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        result = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TalbotLabError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3

    print(f"experiment: {result.experiment}")
    print(f"config hash: {result.config_hash}")
    print(f"wall time: {result.provenance['wall_time_s']:.2f} s")
    for name, rows in result.tables.items():
        print(f"table {name}: {len(rows)} rows")
    for check in result.checks:
        state = "SKIP" if check.passed is None else ("PASS" if check.passed else "FAIL")
        print(f"CHECK {check.name}: {state}  {check.detail}")
    if cfg.output:
        try:
            for path in write_result(result, cfg.output):
                print(f"wrote {path}")
        except OSError as exc:
            print(f"cannot write output: {exc}", file=sys.stderr)
            return 2
    if args.check and result.failed_checks():
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

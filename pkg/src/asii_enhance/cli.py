"""Command line interface: ``run``, ``sweep`` and ``selftest``."""

import argparse
import dataclasses
import json
import sys

from .config import load_config
from .estimator import METHODS
from .pipeline import AXES, run_pipeline, sweep
from .selftest import run_selftest


def _float_list(text):
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _method_list(text):
    return [m for m in text.replace(" ", "").split(",") if m]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "UsageError", "message": message}), file=sys.stderr)
        sys.exit(2)


def build_parser():
    parser = _Parser(
        prog="asii-enhance",
        description="Joint far-end/near-end intelligibility enhancement (MVDR + ASII-optimal gains).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate one method on a scenario")
    run.add_argument("--config", help="scenario INI file (default: bundled scenario)")
    run.add_argument("--method", required=True, choices=sorted(METHODS))
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the scenario seed")

    sw = sub.add_parser("sweep", help="sweep near- or far-end SNR over several methods")
    sw.add_argument("--config", help="scenario INI file (default: bundled scenario)")
    sw.add_argument("--axis", required=True, choices=sorted(AXES))
    sw.add_argument("--values", required=True, type=_float_list, help="comma-separated dB values")
    sw.add_argument("--methods", type=_method_list, default=sorted(METHODS),
                    help="comma-separated method names (default: all)")
    sw.add_argument("--out", required=True, help="output directory")
    sw.add_argument("--seed", type=int, help="override the scenario seed")

    sub.add_parser("selftest", help="run oracle-equivalence and invariant checks")
    return parser


def _error(exc):
    record = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return 0 if run_selftest() else 1
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        if args.command == "run":
            report = run_pipeline(config, args.method, args.out)
            r = report.per_method[args.method]
            print(f"{args.method}: ASII {r.asii:.4f}  power ratio {r.realized_power_ratio:.9f}")
        else:
            rows, _ = sweep(config, args.axis, args.values, args.methods, args.out)
            for row in rows:
                print(f"{args.axis}={row['axis_value']:+g} dB  {row['method']:<20} ASII {row['asii']:.4f}")
        return 0
    except Exception as exc:  # reported as a machine-readable record
        return _error(exc)


if __name__ == "__main__":
    sys.exit(main())

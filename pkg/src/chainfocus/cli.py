"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .evoc.sim import ConfigError
from .harness.config import Experiment, load_config
from .harness.plot import PlotError, emit_plot
from .harness.runner import RunFailure, run_experiment

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

_COMMANDS = {
    "run-evoc": (Experiment.EVOC, "EVOC lattice simulation"),
    "run-cf-evoc": (Experiment.CF_EVOC, "EVOC with periodic fitness shifts and focus control"),
    "run-portrait": (Experiment.PORTRAIT, "CGP portrait evolution"),
    "oracle-fitness": (Experiment.ORACLE, "enumerate all 729 single steps with their fitness"),
}


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; usage errors are validation errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chainfocus", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--replicates", type=_positive)
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=_positive, default=1, help="parallel seed processes")
    p = sub.add_parser("plot", help="SVG line chart from metrics CSVs")
    p.add_argument("--in", dest="inputs", action="append", required=True, metavar="CSV",
                   help="input CSV (repeat for several series)")
    p.add_argument("--columns", required=True, help="comma-separated column names")
    p.add_argument("--svg", required=True, help="output SVG path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "plot":
        columns = [c.strip() for c in args.columns.split(",") if c.strip()]
        try:
            emit_plot(args.inputs, columns, args.svg)
        except (PlotError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK

    experiment = _COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, experiment=experiment, seed=args.seed,
                          replicates=args.replicates, output_dir=args.out)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        manifest = run_experiment(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RunFailure, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if manifest.failures:
        for seed, msg in sorted(manifest.failures.items()):
            print(f"seed {seed} failed: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(manifest.hashes)} files to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: run experiment grids, inspect stored histories,
and execute the built-in selftest.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import (
    ConfigError,
    DegenerateInputError,
    HslearnError,
    ParseError,
    SchemaError,
    StratificationError,
)
from .harness import emit_table, parse_config, render_table, run_grid
from .hierarchy import load_history

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_DATA_ERRORS = (ParseError, SchemaError, DegenerateInputError, StratificationError)


def _build_parser():
    parser = argparse.ArgumentParser(prog="hslearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment grid from a config file")
    run.add_argument("--config", required=True, help="path to the grid config")
    run.add_argument("--out", default=None, help="output file (default: stdout)")
    run.add_argument("--format", default="csv", choices=("csv", "markdown"))
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    inspect = sub.add_parser("inspect", help="summarize a stored projection history")
    inspect.add_argument("--history", required=True, help="path to a serialized history")

    sub.add_parser("selftest", help="run the built-in oracle checks")
    return parser


def _cmd_run(args):
    try:
        grid = parse_config(args.config)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        if args.seed < 0:
            print("config error: --seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        grid.master_seed = args.seed
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    try:
        records = run_grid(grid, jobs=args.jobs)
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HslearnError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        if args.out:
            emit_table(records, args.format, args.out)
        else:
            sys.stdout.write(render_table(records, args.format))
    except OSError as exc:
        print(f"runtime failure: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_inspect(args):
    try:
        history = load_history(args.history)
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA

    print(f"projection history with {len(history)} model(s)")
    for i, (model, state) in enumerate(zip(history.models, history.schedule_log)):
        line = (
            f"  [{i}] {model.method}: {model.in_dim} selected column(s) -> {model.out_dim} dim(s)"
        )
        if state is not None:
            line += (
                f"; step {state.step}/{state.total_steps}, radius {state.radius:.4g}, "
                f"{state.sphere_count} spheres, sample fraction {state.sample_fraction:.2f}"
            )
        print(line)
    for tau, reason in history.skipped:
        print(f"  skipped iteration {tau}: {reason}")
    return EXIT_OK


def _cmd_selftest():
    from .selftest import run_selftest

    ok, lines = run_selftest()
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_RUNTIME


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "inspect":
        return _cmd_inspect(args)
    return _cmd_selftest()


if __name__ == "__main__":
    sys.exit(main())

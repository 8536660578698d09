"""Command-line entry point: run experiments, probe test functions, plot CSVs."""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .bench import (
    ConfigError,
    SummaryCurve,
    parse_config,
    read_csv,
    render_svg,
    run_experiment,
    write_csv,
)
from .testbed import SIMULATOR_NAMES, get_simulator

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bartopt",
        description="Sequential optimization benchmarks with tree-ensemble "
        "and Gaussian-process surrogates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a replicated experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to key = value config")
    p_run.add_argument("--workers", type=int, default=1, help="parallel replicates")
    p_run.add_argument("--seed", type=int, default=None, help="override base_seed")

    p_sim = sub.add_parser("simulate", help="evaluate a test function at one point")
    p_sim.add_argument("--function", required=True, help=f"one of {SIMULATOR_NAMES}")
    p_sim.add_argument("--point", required=True, help="comma-separated coordinates")

    p_plot = sub.add_parser("plot", help="render summary curves from a results CSV")
    p_plot.add_argument("--input", required=True, help="results CSV path")
    p_plot.add_argument("--output", required=True, help="output SVG path")
    return parser


def _cmd_run(args):
    try:
        config = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        config.base_seed = args.seed
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table, traces, failures = run_experiment(config, workers=args.workers)
    csv_path = out_dir / "results.csv"
    write_csv(table, csv_path)
    print(f"wrote {csv_path} ({len(table.rows)} rows)")

    curves = _curves_from_table(table)
    if curves:
        svg_path = out_dir / "results.svg"
        render_svg(curves, svg_path, n0=config.n0)
        print(f"wrote {svg_path}")

    if failures:
        for rep, msg in failures:
            print(f"warning: replicate {rep} failed: {msg}", file=sys.stderr)
        print(
            f"{len(failures)} of {config.replicates} replicates failed",
            file=sys.stderr,
        )
        return EXIT_PARTIAL
    return EXIT_OK


def _curves_from_table(table):
    """Rebuild per-method mean/median running-best curves from flat rows."""
    icol = {name: i for i, name in enumerate(table.columns)}
    # f_min of the last row in each (method, replicate, iteration) group
    last = {}
    for row in table.rows:
        key = (row[icol["method"]], row[icol["replicate"]], row[icol["iteration"]])
        last[key] = row[icol["f_min"]]
    by_method = defaultdict(lambda: defaultdict(dict))
    for (method, rep, it), fmin in last.items():
        by_method[method][rep][it] = fmin
    curves = []
    for method in sorted(by_method):
        reps = by_method[method]
        n_iter = min(max(d) for d in reps.values())
        paths = np.array(
            [[reps[r][k] for k in range(n_iter + 1)] for r in sorted(reps)]
        )
        curves.append(
            SummaryCurve(
                method=method,
                iterations=np.arange(n_iter + 1),
                mean_fmin=paths.mean(axis=0),
                median_fmin=np.median(paths, axis=0),
            )
        )
    return curves


def _cmd_simulate(args):
    try:
        simulator = get_simulator(args.function)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        x = np.array([float(v) for v in args.point.split(",")], dtype=float)
    except ValueError:
        print(f"error: cannot parse point {args.point!r}", file=sys.stderr)
        return EXIT_CONFIG
    if x.shape != (simulator.d,):
        print(
            f"error: {args.function} expects {simulator.d} coordinates, got {x.size}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    try:
        value = simulator.evaluate(x)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(format(float(value), ".17g"))
    return EXIT_OK


def _cmd_plot(args):
    try:
        table = read_csv(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    curves = _curves_from_table(table)
    try:
        render_svg(curves, args.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {args.output}")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "simulate":
        return _cmd_simulate(args)
    return _cmd_plot(args)


if __name__ == "__main__":
    sys.exit(main())

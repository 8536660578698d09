"""Replicated benchmark runner: paired designs, summary curves, CSV and SVG."""

import concurrent.futures
import datetime
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bart import BartConfig, BartPriors
from .seqopt import (
    SeqConfig,
    Trace,
    initial_design,
    one_shot_baseline,
    sequential_optimize,
    _evaluate,
)
from .testbed import get_simulator

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultsTable",
    "SummaryCurve",
    "parse_config",
    "run_experiment",
    "running_best",
    "summarize",
    "fmin_by_iteration",
    "write_csv",
    "read_csv",
    "render_svg",
]

ALL_METHODS = ("bart", "gp", "oneshot")


class ConfigError(ValueError):
    """Bad experiment configuration (unresolvable names, bad values)."""


@dataclass
class ExperimentConfig:
    function: str
    methods: tuple = ("bart",)
    n0: int = 10
    n_new: int = 10
    n_cand: int = 1000
    replicates: int = 1
    base_seed: int = 0
    output_dir: str = "results"
    bart_m: int = 100
    bart_k: float = 1.0
    bart_n_iter: int = 6000
    bart_burn_in: int = 2000
    bart_thin: int = 20
    gp_nugget_floor: float = 1e-8

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ConfigError(f"unknown method {m!r}; valid: {ALL_METHODS}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        try:
            get_simulator(self.function)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None

    def bart_priors(self):
        return BartPriors(k=self.bart_k, m=self.bart_m)

    def bart_config(self):
        return BartConfig(
            n_iter=self.bart_n_iter, burn_in=self.bart_burn_in, thin=self.bart_thin
        )


_INT_KEYS = {"n0", "n_new", "n_cand", "replicates", "base_seed"}
_OVERRIDE_KEYS = {
    "bart.m": ("bart_m", int),
    "bart.k": ("bart_k", float),
    "bart.n_iter": ("bart_n_iter", int),
    "bart.burn_in": ("bart_burn_in", int),
    "bart.thin": ("bart_thin", int),
    "gp.nugget_floor": ("gp_nugget_floor", float),
}


def parse_config(path):
    """Read a flat key = value config file ('#' starts a comment)."""
    kwargs = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "function":
            kwargs["function"] = value
        elif key == "methods":
            kwargs["methods"] = tuple(m.strip() for m in value.split(",") if m.strip())
        elif key == "output_dir":
            kwargs["output_dir"] = value
        elif key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _OVERRIDE_KEYS:
            attr, conv = _OVERRIDE_KEYS[key]
            kwargs[attr] = conv(value)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if "function" not in kwargs:
        raise ConfigError(f"{path}: missing required key 'function'")
    return ExperimentConfig(**kwargs)


@dataclass
class ResultsTable:
    """Flat evaluation records with a fixed column schema."""

    columns: tuple
    rows: list

    @classmethod
    def for_dimension(cls, d):
        cols = (
            ("method", "replicate", "seed", "iteration", "n_evals")
            + tuple(f"x_{i + 1}" for i in range(d))
            + ("y", "f_min")
        )
        return cls(columns=cols, rows=[])


@dataclass(frozen=True)
class SummaryCurve:
    """Per-iteration mean and median running best over replicates."""

    method: str
    iterations: np.ndarray  # k = 0..n_new
    mean_fmin: np.ndarray
    median_fmin: np.ndarray


def running_best(ys):
    """Running minimum of a sequence."""
    ys = np.asarray(ys, dtype=float)
    if ys.size == 0:
        raise ValueError("need a nonempty sequence")
    return np.minimum.accumulate(ys)


def fmin_by_iteration(trace, n0, n_new):
    """Running best after n0 + k evaluations, for k = 0..n_new."""
    if trace.kind == "oneshot":
        path = trace.f_min_path
    else:
        path = trace.f_min_path[n0 - 1 : n0 + n_new]
    if len(path) != n_new + 1:
        raise ValueError("trace does not cover the requested iterations")
    return np.asarray(path, dtype=float)


def summarize(traces, n0, n_new):
    """Pointwise mean/median of running-best paths for one method."""
    if not traces:
        raise ValueError("need at least one trace")
    methods = {t.method for t in traces}
    if len(methods) != 1:
        raise ValueError("summarize expects traces from a single method")
    paths = np.array([fmin_by_iteration(t, n0, n_new) for t in traces])
    return SummaryCurve(
        method=methods.pop(),
        iterations=np.arange(n_new + 1),
        mean_fmin=paths.mean(axis=0),
        median_fmin=np.median(paths, axis=0),
    )


def _trace_rows(trace, replicate, seed, n0, d):
    rows = []
    if trace.kind == "oneshot":
        for k, p in enumerate(trace.best_points):
            rows.append(
                [trace.method, replicate, seed, k, n0 + k]
                + [float(v) for v in p.x]
                + [p.y, float(trace.f_min_path[k])]
            )
    else:
        for i, p in enumerate(trace.points):
            rows.append(
                [trace.method, replicate, seed, p.iteration, i + 1]
                + [float(v) for v in p.x]
                + [p.y, float(trace.f_min_path[i])]
            )
    return rows


def _run_replicate(config, replicate):
    """All methods for one replicate, sharing the initial design."""
    simulator = get_simulator(config.function)
    seed = config.base_seed + replicate
    ss = np.random.SeedSequence(seed)
    # one child stream per purpose, independent of which methods are enabled
    streams = ss.spawn(1 + len(ALL_METHODS))
    init_rng = np.random.default_rng(streams[0])
    X0 = initial_design(config.n0, simulator.d, init_rng)
    y0 = _evaluate(simulator, X0)

    traces = {}
    for idx, method in enumerate(ALL_METHODS):
        if method not in config.methods:
            continue
        rng = np.random.default_rng(streams[1 + idx])
        if method == "oneshot":
            traces[method] = one_shot_baseline(simulator, config.n0, config.n_new, rng)
        else:
            seq = SeqConfig(
                n0=config.n0,
                n_new=config.n_new,
                n_cand=config.n_cand,
                method=method,
                seed=seed,
                bart_priors=config.bart_priors(),
                bart_config=config.bart_config(),
                gp_nugget_floor=config.gp_nugget_floor,
            )
            traces[method] = sequential_optimize(
                simulator, seq, rng, initial=(X0, y0)
            )
    return seed, traces


def run_experiment(config, workers=1, csv_path=None):
    """Run all replicates and methods; returns (table, traces, failures).

    traces maps method -> list of Trace in replicate order (failed
    replicates omitted); failures is a list of (replicate, message).
    """
    simulator = get_simulator(config.function)
    table = ResultsTable.for_dimension(simulator.d)
    traces = {m: [] for m in config.methods}
    failures = []

    results = {}
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_run_replicate, config, r): r
                for r in range(config.replicates)
            }
            for fut, r in futures.items():
                try:
                    results[r] = fut.result()
                except Exception as exc:
                    failures.append((r, str(exc)))
    else:
        for r in range(config.replicates):
            try:
                results[r] = _run_replicate(config, r)
            except Exception as exc:
                failures.append((r, str(exc)))

    for r in range(config.replicates):
        if r not in results:
            continue
        seed, rep_traces = results[r]
        for method in config.methods:
            trace = rep_traces[method]
            traces[method].append(trace)
            table.rows.extend(_trace_rows(trace, r, seed, config.n0, simulator.d))

    if csv_path is not None:
        write_csv(table, csv_path)
    return table, traces, failures


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(table, path):
    """Write the results table; first line is a timestamp comment."""
    path = Path(path)
    try:
        with path.open("w") as fh:
            stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
            fh.write(f"# generated {stamp}\n")
            fh.write(",".join(table.columns) + "\n")
            for row in table.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_csv(path):
    """Parse a results CSV back into a ResultsTable."""
    path = Path(path)
    try:
        lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    if not lines:
        raise ValueError(f"{path}: empty results file")
    columns = tuple(lines[0].split(","))
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row = [parts[0]] + [int(v) for v in parts[1:5]] + [float(v) for v in parts[5:]]
        rows.append(row)
    return ResultsTable(columns=columns, rows=rows)


_COLORS = {"bart": "#1b6ca8", "gp": "#c0392b", "oneshot": "#5e8c4a"}


def render_svg(curves, path, n0=None, width=640, height=480, title="running best"):
    """Static SVG: one polyline per (method, statistic) with plain axes."""
    margin = 60
    pw, ph = width - 2 * margin, height - 2 * margin

    series = []
    for curve in curves:
        xs = curve.iterations + (n0 or 0)
        series.append((f"{curve.method} mean", xs, curve.mean_fmin, "none"))
        series.append((f"{curve.method} median", xs, curve.median_fmin, "6,4"))

    if series:
        all_x = np.concatenate([s[1] for s in series])
        all_y = np.concatenate([s[2] for s in series])
        x0f, x1f = float(all_x.min()), float(all_x.max())
        y0f, y1f = float(all_y.min()), float(all_y.max())
        if x1f == x0f:
            x1f += 1.0
        if y1f == y0f:
            y1f += 1.0
    else:
        x0f, x1f, y0f, y1f = 0.0, 1.0, 0.0, 1.0

    def sx(v):
        return margin + (v - x0f) / (x1f - x0f) * pw

    def sy(v):
        return margin + ph - (v - y0f) / (y1f - y0f) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{margin + ph}" x2="{margin + pw}" y2="{margin + ph}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{margin + ph}" stroke="black"/>',
        f'<text x="{margin + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="14">'
        "n evaluations</text>",
        f'<text x="16" y="{margin + ph / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 16 {margin + ph / 2:.1f})">f_min</text>',
        f'<text x="{margin + pw / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{margin}" y="{margin + ph + 20}" text-anchor="middle" font-size="12">{x0f:g}</text>',
        f'<text x="{margin + pw}" y="{margin + ph + 20}" text-anchor="middle" font-size="12">{x1f:g}</text>',
        f'<text x="{margin - 6}" y="{margin + ph}" text-anchor="end" font-size="12">{y0f:.3g}</text>',
        f'<text x="{margin - 6}" y="{margin + 10}" text-anchor="end" font-size="12">{y1f:.3g}</text>',
    ]
    for li, (label, xs, ys, dash) in enumerate(series):
        method = label.split()[0]
        color = _COLORS.get(method, "#555555")
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash != "none" else ""
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} '
            f'points="{pts}"/>'
        )
        ly = margin + 16 + 16 * li
        parts.append(
            f'<line x1="{margin + pw - 130}" y1="{ly}" x2="{margin + pw - 100}" y2="{ly}" '
            f'stroke="{color}" stroke-width="1.5"{dash_attr}/>'
        )
        parts.append(
            f'<text x="{margin + pw - 94}" y="{ly + 4}" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    try:
        Path(path).write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc

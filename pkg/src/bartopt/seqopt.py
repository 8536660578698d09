"""Sequential design loop: Monte-Carlo EI over posterior draws, candidate
selection, and the one-shot space-filling baseline."""

from dataclasses import dataclass, field

import numpy as np

from .bart import BartConfig, BartPosterior, BartPriors, fit_bart
from .design import augment_corners, maximin_lhd, random_lhd
from .gp import ei_closed_form, gp_fit, gp_predict

__all__ = [
    "EvaluatedPoint",
    "Trace",
    "SeqConfig",
    "mc_expected_improvement",
    "select_next_point",
    "sequential_optimize",
    "one_shot_baseline",
]

METHODS = ("bart", "gp")


@dataclass(frozen=True)
class EvaluatedPoint:
    x: np.ndarray
    y: float
    iteration: int  # 0 for the initial design, k for the k-th addition


@dataclass(frozen=True)
class Trace:
    """Ordered evaluations of one run plus the running-best path.

    For sequential runs f_min_path[i] is the running minimum after point i
    and is non-increasing.  For the one-shot baseline (kind="oneshot")
    f_min_path[k] is the minimum of an independent design of size n0+k and
    need not be monotone; `points` then stores the final design and
    `best_points` the per-size minimizers.
    """

    points: tuple
    f_min_path: np.ndarray
    method: str
    seed: int | None = None
    kind: str = "sequential"
    best_points: tuple = ()

    def __post_init__(self):
        if self.kind == "sequential":
            ys = np.array([p.y for p in self.points])
            expected = np.minimum.accumulate(ys)
            if not np.allclose(expected, self.f_min_path):
                raise ValueError("f_min_path is not the running minimum of y")

    @property
    def n_evals(self):
        return len(self.points)


@dataclass
class SeqConfig:
    """One sequential run: budget sizes, method, and surrogate settings."""

    n0: int
    n_new: int
    n_cand: int
    method: str = "bart"
    seed: int = 0
    bart_priors: BartPriors = field(default_factory=BartPriors)
    bart_config: BartConfig = field(default_factory=BartConfig)
    gp_nugget_floor: float = 1e-8
    maximin_sweeps: int | None = None

    def __post_init__(self):
        if self.n0 < 3:
            raise ValueError("n0 must be >= 3 (two corners plus an interior point)")
        if self.n_new < 0 or self.n_cand < 1:
            raise ValueError("need n_new >= 0 and n_cand >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")


def mc_expected_improvement(draws_at_x, f_min):
    """Sample-average improvement max(f_min - draw, 0) over posterior draws."""
    draws = np.asarray(draws_at_x, dtype=float)
    if draws.size == 0:
        raise ValueError("need at least one posterior draw")
    return float(np.mean(np.maximum(f_min - draws, 0.0)))


def _ei_vector(posterior, candidates, f_min):
    if isinstance(posterior, BartPosterior):
        if posterior.h_cand.shape[1] != len(candidates):
            raise ValueError("posterior draws do not match the candidate set")
        return np.mean(np.maximum(f_min - posterior.h_cand, 0.0), axis=0)
    mean, sd = posterior
    return np.asarray(ei_closed_form(f_min, mean, sd))


def select_next_point(posterior, candidates, f_min):
    """Argmax of EI over the candidate set; ties go to the lowest index.

    `posterior` is either a BartPosterior evaluated at these candidates or
    a (mean, sd) pair of plug-in predictive moments.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    ei_all = _ei_vector(posterior, candidates, f_min)
    best = int(np.argmax(ei_all))
    return candidates[best], float(ei_all[best]), ei_all


def initial_design(n0, d, rng, sweeps=None):
    """Corner-augmented maximin LHD: n0-2 space-filling runs plus both corners."""
    if sweeps is None:
        sweeps = 2 * (n0 - 2)
    return augment_corners(maximin_lhd(n0 - 2, d, rng, sweeps=sweeps))


def _evaluate(simulator, X):
    return np.array([simulator.evaluate(x) for x in X], dtype=float)


def sequential_optimize(simulator, config, rng, initial=None):
    """Full sequential loop: initial design, then n_new EI-guided additions.

    A fresh random LHD candidate set is drawn every iteration, the
    surrogate is refit on all data so far, and the EI argmax is evaluated.
    `initial` optionally supplies a pre-evaluated (X0, y0) starting design
    (used for paired comparisons across methods).
    """
    d = simulator.d
    if initial is None:
        X = initial_design(config.n0, d, rng, config.maximin_sweeps)
        y = _evaluate(simulator, X)
    else:
        X0, y0 = initial
        X = np.array(X0, dtype=float)
        y = np.array(y0, dtype=float)
        if X.shape[0] != config.n0:
            raise ValueError("initial design size does not match n0")

    points = [EvaluatedPoint(x.copy(), float(v), 0) for x, v in zip(X, y)]

    for k in range(1, config.n_new + 1):
        cand = random_lhd(config.n_cand, d, rng)
        f_min = float(y.min())
        if config.method == "bart":
            post = fit_bart(
                X, y, cand, priors=config.bart_priors, config=config.bart_config, rng=rng
            )
        else:
            model = gp_fit(X, y, nugget_floor=config.gp_nugget_floor, rng=rng)
            post = gp_predict(model, cand)
        x_star, _, _ = select_next_point(post, cand, f_min)
        try:
            y_star = float(simulator.evaluate(x_star))
        except Exception as exc:
            raise RuntimeError(f"simulator failed at x={x_star.tolist()}") from exc
        X = np.vstack([X, x_star])
        y = np.append(y, y_star)
        points.append(EvaluatedPoint(x_star.copy(), y_star, k))

    return Trace(
        points=tuple(points),
        f_min_path=np.minimum.accumulate(y),
        method=config.method,
        seed=config.seed,
    )


def one_shot_baseline(simulator, n0, n_new, rng, maximin_sweeps=None):
    """Non-sequential baseline: independent maximin LHDs of growing size.

    For each k = 0..n_new an independent (n0+k)-point design is drawn and
    evaluated; f_min_path[k] is its minimum.  Designs are independent, so
    the path is not monotone.
    """
    d = simulator.d
    f_min_path = np.empty(n_new + 1)
    best_points = []
    final_points = ()
    for k in range(n_new + 1):
        size = n0 + k
        sweeps = maximin_sweeps if maximin_sweeps is not None else 2 * size
        design = maximin_lhd(size, d, rng, sweeps=sweeps)
        ys = _evaluate(simulator, design)
        imin = int(np.argmin(ys))
        f_min_path[k] = ys[imin]
        best_points.append(EvaluatedPoint(design[imin].copy(), float(ys[imin]), k))
        if k == n_new:
            final_points = tuple(
                EvaluatedPoint(x.copy(), float(v), k) for x, v in zip(design, ys)
            )
    return Trace(
        points=final_points,
        f_min_path=f_min_path,
        method="oneshot",
        kind="oneshot",
        best_points=tuple(best_points),
    )

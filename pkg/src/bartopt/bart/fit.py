"""Backfitting MCMC driver and batch posterior prediction."""

from dataclasses import dataclass, field

import numpy as np

from . import _mcmc
from .priors import BartPriors, ResponseScaling
from .trees import DEFAULT_MOVE_PROBS, CutpointGrid

__all__ = [
    "BartConfig",
    "BartPosterior",
    "BartMcmcState",
    "mcmc_sweep",
    "fit_bart",
    "prior_shape_frequencies",
]


@dataclass
class BartConfig:
    """MCMC schedule and proposal mixture."""

    n_iter: int = 6000
    burn_in: int = 2000
    thin: int = 20
    move_probs: np.ndarray = field(default_factory=lambda: DEFAULT_MOVE_PROBS.copy())
    n_cutpoints: int = 1000

    def __post_init__(self):
        self.move_probs = np.asarray(self.move_probs, dtype=float)
        if self.move_probs.shape != (4,) or np.any(self.move_probs < 0.0):
            raise ValueError("move_probs must be 4 nonnegative weights")
        if not np.isclose(self.move_probs.sum(), 1.0):
            raise ValueError("move_probs must sum to 1")
        if self.burn_in < 0 or self.n_iter <= self.burn_in or self.thin < 1:
            raise ValueError("need 0 <= burn_in < n_iter and thin >= 1")
        if self.n_draws < 1:
            raise ValueError("schedule retains no draws")

    @property
    def n_draws(self):
        return (self.n_iter - self.burn_in) // self.thin


@dataclass(frozen=True)
class BartPosterior:
    """Retained posterior draws on the original response scale.

    h_train: (N, n) draws of the de-noised response at the training points;
    h_cand: (N, n_cand) draws at the candidate points; sigma: (N,) noise
    standard deviations.
    """

    h_train: np.ndarray
    h_cand: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if not (
            self.h_train.shape[0] == self.h_cand.shape[0] == self.sigma.shape[0]
        ):
            raise ValueError("inconsistent draw counts")
        for a in (self.h_train, self.h_cand, self.sigma):
            if not np.all(np.isfinite(a)):
                raise ValueError("posterior draws contain non-finite values")

    @property
    def n_draws(self):
        return self.sigma.shape[0]


class BartMcmcState:
    """Mutable sampler state: m trees, their fits, and sigma^2.

    Operates on the scaled response; `fit_bart` owns the rescaling.
    """

    def __init__(self, X, y_scaled, priors, config, sig2_init=None):
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        y_scaled = np.ascontiguousarray(y_scaled, dtype=float)
        n, d = X.shape
        m = priors.m
        self.X = X
        self.y = y_scaled
        self.priors = priors
        self.config = config
        self.grid = CutpointGrid.uniform(d, config.n_cutpoints)
        self.feat = np.full((m, _mcmc.HEAP_SIZE), _mcmc.UNUSED, np.int64)
        self.feat[:, 1] = _mcmc.LEAF
        self.cutidx = np.zeros((m, _mcmc.HEAP_SIZE), np.int64)
        self.leafv = np.zeros((m, _mcmc.HEAP_SIZE), np.float64)
        self.maxnodes = np.ones(m, np.int64)
        self.leaf_id = np.ones((m, n), np.int64)
        self.fit = np.zeros((m, n), np.float64)
        self.allfit = np.zeros(n, np.float64)
        if sig2_init is None:
            sig2_init = float(np.var(y_scaled)) if n > 1 else 1.0
            if sig2_init <= 0.0:
                sig2_init = 1.0
        self.sig2 = float(sig2_init)
        sd = float(np.std(y_scaled, ddof=1)) if n > 1 else 1.0
        self.lam = priors.lam_for(sd if sd > 0 else 1.0)
        self._resid = np.empty(n)
        self._ws = _mcmc.make_workspace(n)

    @property
    def residuals(self):
        return self.y - self.allfit

    def mean_tree_depth(self):
        depths = [
            _mcmc.node_depth(int(mx)) for mx in self.maxnodes
        ]
        return float(np.mean(depths))

    def predict(self, points):
        """Current-ensemble prediction h at the given points (scaled scale)."""
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
        out = np.empty(points.shape[0])
        _mcmc.ensemble_predict_points(
            self.feat, self.cutidx, self.leafv, self.grid.cuts, points, out
        )
        return out


def mcmc_sweep(state, rng):
    """One backfitting sweep over all trees followed by the sigma draw."""
    p = state.priors
    state.sig2 = _mcmc.sweep(
        state.feat,
        state.cutidx,
        state.leafv,
        state.maxnodes,
        state.leaf_id,
        state.fit,
        state.X,
        state.y,
        state.allfit,
        state.grid.cuts,
        state.sig2,
        p.sigma_mu ** 2,
        float(p.nu),
        float(state.lam),
        float(p.tree_alpha),
        float(p.tree_beta),
        state.config.move_probs,
        rng,
        state._resid,
        state._ws,
    )
    return state


def fit_bart(X, y, candidates, priors=None, config=None, rng=None, diag_stream=None):
    """Fit the sum-of-trees surrogate and record draws at fixed candidates.

    The response is affinely mapped to (-0.5, 0.5) for sampling; all
    returned quantities are mapped back to the original scale.  Candidate
    predictions are generated during sampling (batch predict); there is no
    predict-at-new-x on the returned posterior.
    """
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    y = np.asarray(y, dtype=float)
    candidates = np.ascontiguousarray(np.atleast_2d(candidates), dtype=float)
    if rng is None:
        rng = np.random.default_rng()
    priors = priors or BartPriors()
    config = config or BartConfig()

    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 training points")
    if y.shape != (n,):
        raise ValueError("y must have one entry per training row")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if candidates.shape[0] < 1 or candidates.shape[1] != d:
        raise ValueError("candidates must be a nonempty (n_cand, d) array")
    for name, a in (("X", X), ("candidates", candidates)):
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ValueError(f"{name} has coordinates outside the unit cube")
    if y.max() <= y.min():
        raise ValueError("response has zero variance; scaling undefined")

    scaling = ResponseScaling(float(y.min()), float(y.max()))
    y_sc = scaling.scale(y)
    state = BartMcmcState(X, y_sc, priors, config, sig2_init=None)

    n_draws = config.n_draws
    h_train = np.empty((n_draws, n))
    h_cand = np.empty((n_draws, candidates.shape[0]))
    sigma = np.empty(n_draws)
    cand_buf = np.empty(candidates.shape[0])

    j = 0
    for it in range(config.n_iter):
        mcmc_sweep(state, rng)
        if diag_stream is not None:
            diag_stream.write(
                f"{it}\t{np.sqrt(state.sig2):.6e}\t{state.mean_tree_depth():.3f}\n"
            )
        if it >= config.burn_in and (it - config.burn_in) % config.thin == config.thin - 1:
            if j < n_draws:
                h_train[j] = state.allfit
                _mcmc.ensemble_predict_points(
                    state.feat,
                    state.cutidx,
                    state.leafv,
                    state.grid.cuts,
                    candidates,
                    cand_buf,
                )
                h_cand[j] = cand_buf
                sigma[j] = np.sqrt(state.sig2)
                j += 1

    return BartPosterior(
        h_train=scaling.unscale(h_train),
        h_cand=scaling.unscale(h_cand),
        sigma=scaling.unscale_sigma(sigma),
    )


def prior_shape_frequencies(n_sweeps, rng, d=1, alpha=0.95, beta=2.0, move_probs=None, n_bins=5):
    """Terminal-node-count frequencies from a likelihood-free chain.

    Returns an array of length n_bins: relative frequency of trees with
    1, 2, ..., n_bins-1 and >= n_bins terminal nodes.
    """
    pmoves = DEFAULT_MOVE_PROBS if move_probs is None else np.asarray(move_probs, float)
    grid = CutpointGrid.uniform(d)
    counts = _mcmc.prior_shape_chain(
        grid.cuts, int(n_sweeps), float(alpha), float(beta), pmoves, rng
    )
    freqs = np.zeros(n_bins)
    for b in range(1, n_bins):
        freqs[b - 1] = np.mean(counts == b)
    freqs[n_bins - 1] = np.mean(counts >= n_bins)
    return freqs

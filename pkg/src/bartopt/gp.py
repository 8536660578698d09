"""Stationary Gaussian-process baseline with closed-form expected improvement.

Anisotropic Gaussian correlation, constant trend, and a relative nugget;
hyperparameters by multi-start maximum profile likelihood (plug-in, not
fully Bayesian).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.stats import norm

__all__ = [
    "GpHyperParams",
    "GpModel",
    "gauss_corr",
    "gp_fit",
    "gp_predict",
    "ei_closed_form",
]

THETA_BOUNDS = (1e-2, 1e3)
NUGGET_CEIL = 1.0
DEFAULT_NUGGET_FLOOR = 1e-8


@dataclass(frozen=True)
class GpHyperParams:
    theta: np.ndarray  # per-axis decay rates of exp(-sum theta_k dx_k^2)
    sigma2_process: float
    nugget: float  # relative noise ratio omega; noise var = sigma2_process * omega
    mean: float


@dataclass(frozen=True)
class GpModel:
    params: GpHyperParams
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray | None  # Cholesky of K + omega*I (lower)
    alpha: np.ndarray | None  # (K + omega*I)^-1 (y - mean)
    constant: bool = False


def gauss_corr(x, x2, theta):
    """Product Gaussian correlation exp(-sum_k theta_k (x_k - x2_k)^2)."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    theta = np.asarray(theta, dtype=float)
    diff = x - x2
    return float(np.exp(-np.sum(theta * diff * diff)))


def _corr_matrix(X, theta):
    scaled = X * np.sqrt(theta)
    sq = np.sum(scaled**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * scaled @ scaled.T
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2)


def _cross_corr(Xnew, X, theta):
    a = Xnew * np.sqrt(theta)
    b = X * np.sqrt(theta)
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2)


def _profile_neg_loglik(z, X, y, nugget_floor):
    """Negative profile log likelihood over log(theta), log(omega)."""
    n, d = X.shape
    theta = np.exp(z[:d])
    omega = max(float(np.exp(z[d])), nugget_floor)
    C = _corr_matrix(X, theta)
    C[np.diag_indices_from(C)] += omega
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        return 1e12
    ones = np.ones(n)
    a = solve_triangular(L, y, lower=True)
    b = solve_triangular(L, ones, lower=True)
    mu = (b @ a) / (b @ b)
    resid = a - mu * b
    s2 = (resid @ resid) / n
    if s2 <= 0.0:
        return 1e12
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return 0.5 * (n * np.log(s2) + logdet)


def gp_fit(X, y, nugget_floor=DEFAULT_NUGGET_FLOOR, n_starts=None, rng=None):
    """Fit hyperparameters by multi-start maximum profile likelihood.

    The trend and process variance are profiled out analytically; the
    derivative-free search runs over log(theta) and log(nugget) within
    fixed bounds.
    """
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 training points")
    if rng is None:
        rng = np.random.default_rng()
    if n_starts is None:
        n_starts = 5 + 2 * d

    if np.ptp(y) == 0.0:
        params = GpHyperParams(np.ones(d), 0.0, nugget_floor, float(y[0]))
        return GpModel(params, X, y, None, None, constant=True)

    lo = np.concatenate([np.full(d, math.log(THETA_BOUNDS[0])), [math.log(nugget_floor)]])
    hi = np.concatenate([np.full(d, math.log(THETA_BOUNDS[1])), [math.log(NUGGET_CEIL)]])
    bounds = list(zip(lo, hi))

    best = None
    for s in range(n_starts):
        z0 = lo + (hi - lo) * rng.random(d + 1)
        res = minimize(
            _profile_neg_loglik,
            z0,
            args=(X, y, nugget_floor),
            method="L-BFGS-B",
            bounds=bounds,
        )
        if best is None or res.fun < best.fun:
            best = res

    z = best.x
    theta = np.exp(z[:d])
    omega = max(float(np.exp(z[d])), nugget_floor)
    C = _corr_matrix(X, theta)
    C[np.diag_indices_from(C)] += omega
    try:
        cf = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(C)
        raise np.linalg.LinAlgError(
            f"correlation matrix singular after nugget floor (cond ~ {cond:.2e})"
        ) from exc
    ones = np.ones(n)
    Cinv_y = cho_solve((cf, True), y)
    Cinv_1 = cho_solve((cf, True), ones)
    mu = float(ones @ Cinv_y) / float(ones @ Cinv_1)
    resid = y - mu
    alpha = cho_solve((cf, True), resid)
    s2 = float(resid @ alpha) / n
    params = GpHyperParams(theta, s2, omega, mu)
    return GpModel(params, X, y, cf, alpha)


def gp_predict(model, x):
    """Kriging mean and standard deviation at one point or a batch.

    Returns (mean, sd) as floats for a single point or arrays for a
    2-D input batch.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xnew = np.atleast_2d(x)
    p = model.params
    if model.constant:
        mean = np.full(Xnew.shape[0], p.mean)
        sd = np.zeros(Xnew.shape[0])
    else:
        r = _cross_corr(Xnew, model.X, p.theta)
        mean = p.mean + r @ model.alpha
        v = solve_triangular(model.chol, r.T, lower=True)
        var = p.sigma2_process * (1.0 + p.nugget - np.sum(v * v, axis=0))
        sd = np.sqrt(np.maximum(var, 0.0))
    if single:
        return float(mean[0]), float(sd[0])
    return mean, sd


def ei_closed_form(f_min, y_hat, s):
    """Expected improvement under a normal predictive law; s may be 0."""
    y_hat = np.asarray(y_hat, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("predictive sd must be nonnegative")
    diff = f_min - y_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(s > 0.0, diff / np.where(s > 0.0, s, 1.0), 0.0)
    ei = np.where(
        s > 0.0,
        diff * norm.cdf(u) + s * norm.pdf(u),
        np.maximum(diff, 0.0),
    )
    if ei.ndim == 0:
        return float(max(ei, 0.0))
    return np.maximum(ei, 0.0)

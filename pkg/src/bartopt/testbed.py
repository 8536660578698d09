"""Closed-form test simulators on the unit hypercube.

Each simulator is deterministic and exposes a unit-cube interface; the
linear rescaling to the native domain is internal (`ScalingTransform`).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "ScalingTransform",
    "Simulator",
    "RonkkonenParams",
    "gramacy_lee_1d",
    "bernstein_warp",
    "ronkkonen_2d",
    "spike_4d",
    "get_simulator",
    "SIMULATOR_NAMES",
]


@dataclass(frozen=True)
class ScalingTransform:
    """Per-axis linear map between the unit cube and a native box."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise ValueError("need upper > lower per axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def to_native(self, x_unit):
        return self.lower + (self.upper - self.lower) * np.asarray(x_unit, dtype=float)

    def to_unit(self, x_native):
        return (np.asarray(x_native, dtype=float) - self.lower) / (self.upper - self.lower)


@dataclass(frozen=True)
class Simulator:
    """Named deterministic function from [0,1]^d to a real output."""

    name: str
    d: int
    evaluate: Callable[[np.ndarray], float]


@dataclass(frozen=True)
class RonkkonenParams:
    """Per-axis Bernstein warp: degree and non-decreasing control points 0..1."""

    alpha: float
    degrees: tuple
    control_points: tuple

    def __post_init__(self):
        for n_i, p_i in zip(self.degrees, self.control_points):
            p = np.asarray(p_i, dtype=float)
            if len(p) != n_i + 1:
                raise ValueError("control point vector must have degree+1 entries")
            if p[0] != 0.0 or p[-1] != 1.0 or np.any(np.diff(p) < 0):
                raise ValueError("control points must be non-decreasing from 0 to 1")


RONKKONEN_2D_PARAMS = RonkkonenParams(
    alpha=0.8,
    degrees=(4, 4),
    control_points=((0.0, 0.1, 0.2, 0.5, 1.0), (0.0, 0.5, 0.8, 0.9, 1.0)),
)


def _check_unit(x, d, name):
    x = np.asarray(x, dtype=float)
    if d == 1:
        x = np.atleast_1d(x)
    if x.shape[-1] != d and not (d == 1 and x.ndim == 1):
        raise ValueError(f"{name} expects {d}-dimensional input")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name}: input outside the unit cube")
    return x


def gramacy_lee_1d(x):
    """Oscillatory 1-D test function on [0,1], native domain t in [0.5, 2.5].

    y(t) = sin(10*pi*t) / (2t) + (t - 1)^4 with t = 0.5 + 2x.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("gramacy1d: input outside [0, 1]")
    t = 0.5 + 2.0 * x
    y = np.sin(10.0 * np.pi * t) / (2.0 * t) + (t - 1.0) ** 4
    return y if y.ndim else float(y)


def bernstein_warp(xi, degree, control_points):
    """Bernstein-weighted warp w(xi) = sum_j C(n,j) P_j (1-xi)^(n-j) xi^j."""
    xi = np.asarray(xi, dtype=float)
    p = np.asarray(control_points, dtype=float)
    n = degree
    j = np.arange(n + 1)
    coef = np.array([float(math.comb(n, k)) for k in j]) * p
    terms = coef * (1.0 - xi[..., None]) ** (n - j) * xi[..., None] ** j
    w = terms.sum(axis=-1)
    return w if w.ndim else float(w)


def ronkkonen_2d(x, params=RONKKONEN_2D_PARAMS):
    """Additive 2-D multimodal function of Bernstein-warped coordinates.

    y(x) = (1/4) sum_i [cos(4*pi*w_i) + alpha*cos(8*pi*w_i)].
    """
    x = _check_unit(x, 2, "ronkkonen2d")
    total = 0.0
    for i in range(2):
        w = bernstein_warp(x[..., i], params.degrees[i], params.control_points[i])
        total = total + np.cos(4.0 * np.pi * w) + params.alpha * np.cos(8.0 * np.pi * w)
    y = 0.25 * total
    return y if np.ndim(y) else float(y)


def spike_4d(x):
    """Additive 4-D function with a narrow spike at the center.

    Native coordinates t_i = -2 + 4*x_i in [-2, 2];
    y = sum_i [-sin(t_i) - 2 exp(-30 t_i^2)], global minimum -8 at t = 0.
    """
    x = _check_unit(x, 4, "spike4d")
    t = -2.0 + 4.0 * x
    y = np.sum(-np.sin(t) - 2.0 * np.exp(-30.0 * t * t), axis=-1)
    return y if np.ndim(y) else float(y)


_REGISTRY = {
    "gramacy1d": Simulator("gramacy1d", 1, lambda x: float(gramacy_lee_1d(np.asarray(x).reshape(-1)[0]))),
    "ronkkonen2d": Simulator("ronkkonen2d", 2, lambda x: float(ronkkonen_2d(np.asarray(x).reshape(2)))),
    "spike4d": Simulator("spike4d", 4, lambda x: float(spike_4d(np.asarray(x).reshape(4)))),
}

SIMULATOR_NAMES = tuple(sorted(_REGISTRY))


def get_simulator(name):
    """Look up a simulator by name; raises KeyError listing valid names."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown simulator {name!r}; valid names: {', '.join(SIMULATOR_NAMES)}"
        ) from None

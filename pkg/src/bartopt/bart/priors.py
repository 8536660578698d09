"""Prior settings for the sum-of-trees surrogate."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

__all__ = ["BartPriors", "ResponseScaling", "sigma_prior_scale"]


def sigma_prior_scale(sd_y, nu, q, anchor_fraction):
    """Scale lambda of the scaled-inverse-chi-squared prior on sigma^2.

    Chosen so that P(sigma < anchor_fraction * sd_y) = q when
    sigma^2 ~ nu * lambda / chisq_nu.
    """
    for name, v in (("sd_y", sd_y), ("nu", nu), ("anchor_fraction", anchor_fraction)):
        if not np.isfinite(v) or v <= 0:
            raise ValueError(f"{name} must be positive and finite, got {v}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    c = anchor_fraction * sd_y
    return c * c * chi2.ppf(1.0 - q, nu) / nu


@dataclass
class BartPriors:
    """Leaf, tree-structure, and noise priors.

    sigma_mu is tied to (k, m): each leaf is N(0, 1/(4 k^2 m)) on the
    response scaled to (-0.5, 0.5).  lam, when None, is set at fit time by
    anchoring the q-th quantile of the sigma prior at
    anchor_fraction * sd(scaled y).
    """

    k: float = 1.0
    m: int = 100
    nu: float = 3.0
    q: float = 0.90
    anchor_fraction: float = 0.20
    tree_alpha: float = 0.95
    tree_beta: float = 2.0
    lam: float | None = None

    def __post_init__(self):
        if self.k <= 0 or self.m < 1:
            raise ValueError("need k > 0 and m >= 1")
        if not 0.0 < self.tree_alpha < 1.0 or self.tree_beta < 0.0:
            raise ValueError("need 0 < tree_alpha < 1 and tree_beta >= 0")

    @property
    def sigma_mu(self):
        return 1.0 / (2.0 * self.k * math.sqrt(self.m))

    def lam_for(self, sd_y):
        if self.lam is not None:
            return self.lam
        return sigma_prior_scale(sd_y, self.nu, self.q, self.anchor_fraction)


@dataclass(frozen=True)
class ResponseScaling:
    """Affine map sending the observed response range onto [-0.5, 0.5]."""

    y_min: float
    y_max: float

    def __post_init__(self):
        if not np.isfinite(self.y_min) or not np.isfinite(self.y_max):
            raise ValueError("response range must be finite")
        if self.y_max <= self.y_min:
            raise ValueError("response range must be positive (non-constant y)")

    @property
    def slope(self):
        return self.y_max - self.y_min

    def scale(self, y):
        return (np.asarray(y, dtype=float) - self.y_min) / self.slope - 0.5

    def unscale(self, h):
        return (np.asarray(h, dtype=float) + 0.5) * self.slope + self.y_min

    def unscale_sigma(self, sigma):
        return np.asarray(sigma, dtype=float) * self.slope

"""Noise and leaf prior settings, and the response scaling map."""

import numpy as np
import pytest
from scipy.integrate import quad

from bartopt.bart import BartPriors, ResponseScaling, sigma_prior_scale


def test_lambda_anchor_example():
    lam = sigma_prior_scale(1.0, 3.0, 0.90, 0.20)
    assert abs(lam - 0.04 * 0.584374 / 3.0) < 1e-6


def test_lambda_scales_with_sd_squared():
    lam1 = sigma_prior_scale(1.0, 3.0, 0.90, 0.20)
    lam2 = sigma_prior_scale(2.0, 3.0, 0.90, 0.20)
    assert abs(lam2 - 4.0 * lam1) < 1e-12


def test_lambda_median_anchor():
    lam = sigma_prior_scale(1.0, 3.0, 0.5, 1.0)
    assert abs(lam - 2.36597 / 3.0) < 1e-5


def test_anchor_quantile_by_quadrature():
    # independent check: integrate the scaled-inverse-chi-squared density of
    # sigma^2 up to (anchor * sd)^2 and confirm the mass equals q
    nu, q, frac, sd = 3.0, 0.90, 0.20, 1.7
    lam = sigma_prior_scale(sd, nu, q, frac)

    def density(v):
        return v ** (-(nu / 2.0 + 1.0)) * np.exp(-nu * lam / (2.0 * v))

    c2 = (frac * sd) ** 2
    num, _ = quad(density, 0.0, c2, limit=200)
    den, _ = quad(density, 0.0, np.inf, limit=200)
    assert abs(num / den - q) < 1e-6


def test_sigma_prior_scale_validation():
    for bad in [(-1, 3, 0.9, 0.2), (1, 0, 0.9, 0.2), (1, 3, 1.5, 0.2), (1, 3, 0.9, 0.0)]:
        with pytest.raises(ValueError):
            sigma_prior_scale(*bad)
    with pytest.raises(ValueError):
        sigma_prior_scale(np.inf, 3, 0.9, 0.2)


def test_sigma_mu_formula():
    p = BartPriors()
    assert p.sigma_mu == 1.0 / (2.0 * 1.0 * np.sqrt(100.0))
    p2 = BartPriors(k=2.0, m=25)
    assert abs(p2.sigma_mu - 1.0 / 20.0) < 1e-15


def test_priors_validation():
    with pytest.raises(ValueError):
        BartPriors(k=0.0)
    with pytest.raises(ValueError):
        BartPriors(m=0)
    with pytest.raises(ValueError):
        BartPriors(tree_alpha=1.0)


def test_explicit_lambda_wins():
    p = BartPriors(lam=0.123)
    assert p.lam_for(5.0) == 0.123


def test_response_scaling():
    sc = ResponseScaling(-3.0, 5.0)
    y = np.array([-3.0, 1.0, 5.0])
    ys = sc.scale(y)
    assert np.allclose(ys, [-0.5, 0.0, 0.5])
    assert np.allclose(sc.unscale(ys), y, atol=1e-12)
    assert sc.unscale_sigma(np.array([0.1]))[0] == 0.1 * 8.0
    with pytest.raises(ValueError):
        ResponseScaling(2.0, 2.0)

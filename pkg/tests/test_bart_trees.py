"""Tree structures, the conjugate node updates, and their analytic oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chi2, kstest

from bartopt.bart import (
    CutpointGrid,
    RegressionTree,
    draw_leaf_values,
    draw_sigma2,
    ensemble_predict,
    log_tree_prior,
    node_log_marginal_likelihood,
    tree_predict,
)


def grid_1d(n_cut=9):
    return CutpointGrid.uniform(1, n_cut)


def cut_index_near(grid, axis, value):
    return int(np.argmin(np.abs(grid.cuts[axis] - value)))


def test_cutpoint_grid_default():
    g = CutpointGrid.uniform(3)
    assert g.d == 3 and g.n_cut == 1000
    assert g.cuts[0, 0] > 0.0 and g.cuts[0, -1] < 1.0
    assert np.allclose(np.diff(g.cuts[0]), np.diff(g.cuts[0])[0])
    with pytest.raises(ValueError):
        CutpointGrid(np.array([[0.0, 0.5]]))
    with pytest.raises(ValueError):
        CutpointGrid(np.array([[0.5, 0.5]]))


def test_tree_predict_single_leaf():
    g = grid_1d()
    t = RegressionTree.single_leaf(0.3)
    assert tree_predict(t, g, np.array([0.77])) == 0.3


def test_tree_predict_root_split():
    g = CutpointGrid.uniform(2, 9)
    t = RegressionTree.single_leaf()
    t.split(1, axis=0, cut_index=cut_index_near(g, 0, 0.5), left_value=-1.0, right_value=1.0)
    assert tree_predict(t, g, np.array([0.2, 0.9])) == -1.0
    assert tree_predict(t, g, np.array([0.8, 0.1])) == 1.0


def test_tree_predict_depth_two():
    g = CutpointGrid.uniform(2, 9)
    t = RegressionTree.single_leaf()
    t.split(1, 0, cut_index_near(g, 0, 0.5))
    t.split(2, 1, cut_index_near(g, 1, 0.5), left_value=10.0, right_value=20.0)
    t.set_leaf(3, 30.0)
    # left of the root split, right of the nested split
    assert tree_predict(t, g, np.array([0.4, 0.6])) == 20.0
    assert tree_predict(t, g, np.array([0.4, 0.4])) == 10.0
    assert tree_predict(t, g, np.array([0.9, 0.9])) == 30.0


def test_ensemble_predict():
    g = grid_1d()
    trees = [RegressionTree.single_leaf(0.25) for _ in range(8)]
    assert ensemble_predict(trees, g, np.array([0.5])) == 8 * 0.25
    two = [RegressionTree.single_leaf(0.1), RegressionTree.single_leaf(-0.3)]
    assert abs(ensemble_predict(two, g, np.array([0.5])) - (-0.2)) < 1e-15


def test_ensemble_piecewise_constant():
    g = CutpointGrid.uniform(1, 9)
    t = RegressionTree.single_leaf()
    t.split(1, 0, 4, left_value=-2.0, right_value=3.0)  # cut at 0.5
    c = g.cuts[0, 4]
    eps = 1e-6
    assert tree_predict(t, g, np.array([c - eps])) == tree_predict(
        t, g, np.array([c - 0.04])
    )
    assert tree_predict(t, g, np.array([c + eps])) == tree_predict(
        t, g, np.array([c + 0.04])
    )


def test_log_tree_prior_values():
    g = grid_1d()
    stump = RegressionTree.single_leaf()
    assert abs(log_tree_prior(stump, 0.95, 2.0) - math.log(0.05)) < 1e-12
    split = RegressionTree.single_leaf().split(1, 0, 4)
    expected = math.log(0.95) + 2.0 * math.log(1.0 - 0.95 / 4.0)
    assert abs(log_tree_prior(split, 0.95, 2.0) - expected) < 1e-12


def test_log_tree_prior_large_beta_kills_depth():
    deep = RegressionTree.single_leaf().split(1, 0, 4)
    deep.split(2, 0, 2)
    stump = RegressionTree.single_leaf()
    assert log_tree_prior(deep, 0.5, 50.0) < log_tree_prior(stump, 0.5, 50.0) - 20.0


def test_node_logml_pinned_prior():
    val = node_log_marginal_likelihood([0.0], sigma=1.0, sigma_mu=0.0)
    assert abs(val - (-0.5 * math.log(2 * math.pi))) < 1e-9


def test_node_logml_variance_adds():
    val = node_log_marginal_likelihood([0.0], sigma=1.0, sigma_mu=1.0)
    assert abs(val - (-0.5 * math.log(4 * math.pi))) < 1e-9


def test_node_logml_quadrature_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        nb = int(rng.integers(1, 11))
        r = rng.normal(size=nb)
        sigma = float(rng.uniform(0.4, 2.0))
        sigma_mu = float(rng.uniform(0.05, 2.0))

        def integrand(mu):
            like = np.prod(
                np.exp(-((r - mu) ** 2) / (2 * sigma**2))
                / (sigma * math.sqrt(2 * math.pi))
            )
            prior = math.exp(-(mu**2) / (2 * sigma_mu**2)) / (
                sigma_mu * math.sqrt(2 * math.pi)
            )
            return like * prior

        ref, _ = quad(
            integrand, -10 * sigma_mu, 10 * sigma_mu, limit=500, epsabs=0.0, epsrel=1e-12
        )
        got = node_log_marginal_likelihood(r, sigma, sigma_mu)
        assert abs(got - math.log(ref)) < 1e-8


def test_node_logml_validation():
    with pytest.raises(ValueError):
        node_log_marginal_likelihood([], 1.0, 1.0)
    with pytest.raises(ValueError):
        node_log_marginal_likelihood([0.0], 0.0, 1.0)


def test_draw_leaf_values_degenerate_prior():
    g = grid_1d()
    t = RegressionTree.single_leaf(5.0)
    rng = np.random.default_rng(0)
    out = draw_leaf_values(t, g, np.array([[0.5]]), np.array([1.0]), 1.0, 0.0, rng)
    assert out.leafv[1] == 0.0


def test_draw_leaf_values_moments():
    # n_b = 3, r = (1,1,1), sigma = sigma_mu = 1 -> posterior N(0.75, 0.25)
    g = grid_1d()
    t = RegressionTree.single_leaf()
    X = np.full((3, 1), 0.5)
    r = np.ones(3)
    rng = np.random.default_rng(123)
    n_draws = 10**5
    draws = np.empty(n_draws)
    for i in range(n_draws):
        draws[i] = draw_leaf_values(t, g, X, r, 1.0, 1.0, rng).leafv[1]
    se = 0.5 / math.sqrt(n_draws)
    assert abs(draws.mean() - 0.75) < 3 * se
    assert abs(draws.var() - 0.25) < 0.01


def test_draw_leaf_values_large_n_concentrates():
    g = grid_1d()
    t = RegressionTree.single_leaf()
    n = 20000
    X = np.full((n, 1), 0.5)
    r = np.full(n, 0.4)
    rng = np.random.default_rng(3)
    out = draw_leaf_values(t, g, X, r, 1.0, 1.0, rng)
    assert abs(out.leafv[1] - 0.4) < 0.05


def test_draw_leaf_values_empty_leaf_uses_prior():
    g = CutpointGrid.uniform(1, 9)
    t = RegressionTree.single_leaf().split(1, 0, 4)
    X = np.array([[0.1]])  # only the left leaf is populated
    rng = np.random.default_rng(7)
    draws = [
        draw_leaf_values(t, g, X, np.array([0.0]), 1.0, 0.8, rng).leafv[3]
        for _ in range(20000)
    ]
    assert abs(np.std(draws) - 0.8) < 0.02
    assert abs(np.mean(draws)) < 0.02


def test_draw_sigma2_prior_mode():
    # n = 0: the draw is exactly the prior nu*lam/chisq_nu
    nu, lam = 3.0, 0.0078
    rng = np.random.default_rng(21)
    draws = np.array([draw_sigma2([], nu, lam, rng) for _ in range(10**5)])
    stat = kstest(draws, lambda v: chi2.sf(nu * lam / v, nu)).statistic
    assert stat < 0.01


def test_draw_sigma2_posterior_ks():
    nu, lam, n = 3.0, 0.0078, 50
    rng = np.random.default_rng(22)
    e = rng.normal(scale=0.1, size=n)
    s = nu * lam + float(e @ e)
    draws = np.array([draw_sigma2(e, nu, lam, rng) for _ in range(10**5)])
    stat = kstest(draws, lambda v: chi2.sf(s / v, nu + n)).statistic
    assert stat < 0.01


def test_draw_sigma2_concentration():
    nu, lam, n = 3.0, 0.0078, 1000
    rng = np.random.default_rng(23)
    draws = np.array([draw_sigma2(np.zeros(n), nu, lam, rng) for _ in range(10**5)])
    analytic_median = nu * lam / chi2.ppf(0.5, nu + n)
    assert abs(np.median(draws) - analytic_median) / analytic_median < 0.10
    assert np.median(draws) < 5e-5

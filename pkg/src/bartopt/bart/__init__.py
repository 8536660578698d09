"""Bayesian sum-of-trees surrogate: priors, trees, backfitting MCMC."""

from .priors import BartPriors, ResponseScaling, sigma_prior_scale
from .trees import (
    CutpointGrid,
    RegressionTree,
    DEFAULT_MOVE_PROBS,
    tree_predict,
    ensemble_predict,
    log_tree_prior,
    node_log_marginal_likelihood,
    draw_leaf_values,
    draw_sigma2,
    propose_tree_move,
)
from .fit import (
    BartConfig,
    BartPosterior,
    BartMcmcState,
    mcmc_sweep,
    fit_bart,
    prior_shape_frequencies,
)

__all__ = [
    "BartPriors",
    "ResponseScaling",
    "sigma_prior_scale",
    "CutpointGrid",
    "RegressionTree",
    "DEFAULT_MOVE_PROBS",
    "tree_predict",
    "ensemble_predict",
    "log_tree_prior",
    "node_log_marginal_likelihood",
    "draw_leaf_values",
    "draw_sigma2",
    "propose_tree_move",
    "BartConfig",
    "BartPosterior",
    "BartMcmcState",
    "mcmc_sweep",
    "fit_bart",
    "prior_shape_frequencies",
]

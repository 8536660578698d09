"""Sequential global minimization of black-box functions with a Bayesian
sum-of-trees surrogate, a Gaussian-process baseline, and space-filling
designs."""

from .bart import BartConfig, BartPosterior, BartPriors, fit_bart
from .design import augment_corners, maximin_lhd, min_interpoint_distance, random_lhd
from .gp import ei_closed_form, gp_fit, gp_predict
from .seqopt import (
    SeqConfig,
    Trace,
    mc_expected_improvement,
    one_shot_baseline,
    select_next_point,
    sequential_optimize,
)
from .testbed import get_simulator

__version__ = "0.1.0"

__all__ = [
    "BartConfig",
    "BartPosterior",
    "BartPriors",
    "fit_bart",
    "random_lhd",
    "maximin_lhd",
    "augment_corners",
    "min_interpoint_distance",
    "gp_fit",
    "gp_predict",
    "ei_closed_form",
    "SeqConfig",
    "Trace",
    "mc_expected_improvement",
    "select_next_point",
    "sequential_optimize",
    "one_shot_baseline",
    "get_simulator",
]

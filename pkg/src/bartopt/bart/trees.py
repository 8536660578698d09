"""Regression trees over a cutpoint grid, and their conjugate updates.

The heavy lifting happens in the numba kernels of `_mcmc`; this module
provides the object-level surface used by tests and by the fitting loop.
"""

from dataclasses import dataclass

import numpy as np

from . import _mcmc
from ._mcmc import GROW, PRUNE, CHANGE, SWAP, HEAP_SIZE, LEAF, UNUSED

__all__ = [
    "CutpointGrid",
    "RegressionTree",
    "MOVE_NAMES",
    "DEFAULT_MOVE_PROBS",
    "tree_predict",
    "ensemble_predict",
    "log_tree_prior",
    "node_log_marginal_likelihood",
    "draw_leaf_values",
    "draw_sigma2",
    "propose_tree_move",
]

MOVE_NAMES = {"grow": GROW, "prune": PRUNE, "change": CHANGE, "swap": SWAP}

# grow, prune, change, swap
DEFAULT_MOVE_PROBS = np.array([0.25, 0.25, 0.40, 0.10])


@dataclass(frozen=True)
class CutpointGrid:
    """Per-axis ordered interior cutpoints on (0, 1); shape (d, n_cut)."""

    cuts: np.ndarray

    def __post_init__(self):
        cuts = np.ascontiguousarray(self.cuts, dtype=float)
        if cuts.ndim != 2:
            raise ValueError("cuts must have shape (d, n_cut)")
        if np.any(cuts <= 0.0) or np.any(cuts >= 1.0):
            raise ValueError("cutpoints must lie strictly inside (0, 1)")
        if np.any(np.diff(cuts, axis=1) <= 0.0):
            raise ValueError("cutpoints must be strictly increasing per axis")
        object.__setattr__(self, "cuts", cuts)

    @classmethod
    def uniform(cls, d, n_cut=1000):
        axis = np.linspace(0.0, 1.0, n_cut + 2)[1:-1]
        return cls(np.tile(axis, (d, 1)))

    @property
    def d(self):
        return self.cuts.shape[0]

    @property
    def n_cut(self):
        return self.cuts.shape[1]


class RegressionTree:
    """Binary tree with axis-aligned cutpoint rules and scalar leaf values.

    Heap-indexed storage shared with the sampler kernels; build test trees
    with `single_leaf` plus `split` / `set_leaf`.
    """

    def __init__(self, feat=None, cutidx=None, leafv=None):
        if feat is None:
            feat = np.full(HEAP_SIZE, UNUSED, np.int64)
            feat[1] = LEAF
            cutidx = np.zeros(HEAP_SIZE, np.int64)
            leafv = np.zeros(HEAP_SIZE, np.float64)
        self.feat = feat
        self.cutidx = cutidx
        self.leafv = leafv

    @classmethod
    def single_leaf(cls, value=0.0):
        tree = cls()
        tree.leafv[1] = value
        return tree

    def copy(self):
        return RegressionTree(self.feat.copy(), self.cutidx.copy(), self.leafv.copy())

    @property
    def max_node(self):
        active = np.nonzero(self.feat != UNUSED)[0]
        return int(active.max()) if active.size else 1

    def leaf_nodes(self):
        return [int(i) for i in np.nonzero(self.feat == LEAF)[0]]

    def internal_nodes(self):
        return [int(i) for i in np.nonzero(self.feat >= 0)[0]]

    @property
    def n_leaves(self):
        return len(self.leaf_nodes())

    def split(self, node, axis, cut_index, left_value=0.0, right_value=0.0):
        """Turn a leaf into an internal node with two fresh leaves."""
        if self.feat[node] != LEAF:
            raise ValueError(f"node {node} is not a leaf")
        if _mcmc.node_depth(node) >= _mcmc.MAX_DEPTH:
            raise ValueError("tree depth limit reached")
        self.feat[node] = axis
        self.cutidx[node] = cut_index
        self.feat[2 * node] = LEAF
        self.feat[2 * node + 1] = LEAF
        self.leafv[2 * node] = left_value
        self.leafv[2 * node + 1] = right_value
        return self

    def set_leaf(self, node, value):
        if self.feat[node] != LEAF:
            raise ValueError(f"node {node} is not a leaf")
        self.leafv[node] = value
        return self

    def leaf_containing(self, grid, x):
        x = np.ascontiguousarray(x, dtype=float)
        return int(_mcmc.descend(self.feat, self.cutidx, grid.cuts, x, 1))

    def assign(self, grid, X):
        """Leaf node index for each row of X."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        out = np.empty(X.shape[0], np.int64)
        for i in range(X.shape[0]):
            out[i] = _mcmc.descend(self.feat, self.cutidx, grid.cuts, X[i], 1)
        return out


def tree_predict(tree, grid, x):
    """Prediction of a single tree at one point."""
    return float(tree.leafv[tree.leaf_containing(grid, x)])


def ensemble_predict(trees, grid, x):
    """Sum of the individual tree predictions at one point."""
    return float(sum(tree_predict(t, grid, x) for t in trees))


def log_tree_prior(tree, alpha, beta):
    """Log prior probability of the tree's branching structure."""
    if not 0.0 < alpha < 1.0 or beta < 0.0:
        raise ValueError("need 0 < alpha < 1 and beta >= 0")
    total = 0.0
    for i in tree.internal_nodes():
        total += _mcmc.log_psplit(_mcmc.node_depth(i), alpha, beta)
    for i in tree.leaf_nodes():
        total += _mcmc.log_qsplit(_mcmc.node_depth(i), alpha, beta)
    return total


def node_log_marginal_likelihood(residuals, sigma, sigma_mu):
    """Log marginal density of leaf residuals with the leaf mean integrated out."""
    r = np.asarray(residuals, dtype=float)
    if r.size < 1:
        raise ValueError("need at least one residual")
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if sigma_mu < 0.0:
        raise ValueError(f"sigma_mu must be >= 0, got {sigma_mu}")
    return float(
        _mcmc.leaf_logml(
            float(r.size), float(r.sum()), float(r @ r), sigma * sigma, sigma_mu * sigma_mu
        )
    )


def draw_leaf_values(tree, grid, X, residuals, sigma, sigma_mu, rng):
    """Fresh tree with every leaf value drawn from its conjugate posterior.

    Leaves that contain no training point draw from the N(0, sigma_mu^2)
    prior.
    """
    new = tree.copy()
    if X is None or len(X) == 0:
        leaf_id = np.zeros(0, np.int64)
        residuals = np.zeros(0)
    else:
        leaf_id = new.assign(grid, X)
        residuals = np.ascontiguousarray(residuals, dtype=float)
    cnt = np.zeros(HEAP_SIZE)
    s1 = np.zeros(HEAP_SIZE)
    _mcmc.draw_leaf_values_inplace(
        new.feat,
        new.leafv,
        new.max_node,
        leaf_id,
        residuals,
        sigma * sigma,
        sigma_mu * sigma_mu,
        rng,
        cnt,
        s1,
    )
    return new


def draw_sigma2(residuals, nu, lam, rng):
    """Posterior draw of the noise variance given full-model residuals."""
    e = np.asarray(residuals, dtype=float)
    return float(_mcmc.draw_sigma2_kernel(float(e @ e), e.size, float(nu), float(lam), rng))


def propose_tree_move(
    tree,
    grid,
    move,
    rng,
    X=None,
    residuals=None,
    sigma=1.0,
    sigma_mu=1.0,
    move_probs=None,
    alpha=0.95,
    beta=2.0,
):
    """Reversible-jump proposal of the requested move.

    Returns (new_tree, log_proposal_ratio, log_prior_ratio), or None when
    the move is illegal for this tree or no valid proposal exists (no-op
    signal).  With X=None the proposal is data-free (structure-prior mode).
    """
    move_code = MOVE_NAMES[move] if isinstance(move, str) else int(move)
    if X is None:
        X = np.zeros((0, grid.d))
        residuals = np.zeros(0)
        leaf_id = np.zeros(0, np.int64)
    else:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        residuals = (
            np.zeros(X.shape[0]) if residuals is None
            else np.ascontiguousarray(residuals, dtype=float)
        )
        leaf_id = tree.assign(grid, X)
    pmoves = DEFAULT_MOVE_PROBS if move_probs is None else np.asarray(move_probs, float)
    new = tree.copy()
    ws = _mcmc.make_workspace(X.shape[0])
    status, _, _, _, dlogprior, dlogq, _ = _mcmc.mh_move(
        new.feat,
        new.cutidx,
        new.leafv,
        new.max_node,
        leaf_id,
        X,
        residuals,
        grid.cuts,
        sigma * sigma,
        sigma_mu * sigma_mu,
        float(alpha),
        float(beta),
        pmoves,
        rng,
        move_code,
        False,
        ws,
    )
    if status != 0:
        return None
    return new, float(dlogq), float(dlogprior)

"""Latin hypercube designs, maximin optimization, and corner augmentation.

All designs live in the unit hypercube [0, 1]^d and are plain numpy arrays
of shape (n, d), one row per point.
"""

import numpy as np

__all__ = [
    "random_lhd",
    "maximin_lhd",
    "augment_corners",
    "min_interpoint_distance",
]


def random_lhd(n, d, rng, placement="uniform"):
    """Draw a random Latin hypercube design.

    Each column is an independent uniform permutation of the n strata
    [i/n, (i+1)/n).  With ``placement="uniform"`` the point is uniform
    within its stratum; with ``"stratum-center"`` it sits at the center.

    Returns an (n, d) array.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if placement not in ("uniform", "stratum-center"):
        raise ValueError(f"unknown placement {placement!r}")
    strata = np.empty((n, d))
    for j in range(d):
        strata[:, j] = rng.permutation(n)
    if placement == "uniform":
        offset = rng.random((n, d))
    else:
        offset = 0.5
    return (strata + offset) / n


def min_interpoint_distance(design):
    """Smallest pairwise Euclidean distance in the design."""
    design = np.asarray(design, dtype=float)
    n = design.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points for a pairwise distance")
    d2 = _sqdist_matrix(design)
    iu = np.triu_indices(n, k=1)
    return float(np.sqrt(d2[iu].min()))


def maximin_lhd(n, d, rng, sweeps=None, placement="uniform"):
    """Random LHD improved toward the maximin-distance criterion.

    Starts from a random LHD and performs ``sweeps`` passes of within-column
    stratum swaps between randomly paired rows, accepting a swap only if it
    strictly increases the minimum pairwise distance.  The result is still a
    valid LHD (swaps permute stratum assignments within a column).
    """
    if n < 2:
        raise ValueError(f"need n >= 2 for a maximin design, got n={n}")
    if d < 1:
        raise ValueError(f"need d >= 1, got d={d}")
    if sweeps is None:
        sweeps = 2 * n
    if sweeps < 0:
        raise ValueError(f"sweeps must be >= 0, got {sweeps}")

    x = random_lhd(n, d, rng, placement=placement)
    if sweeps == 0:
        return x

    d2 = _sqdist_matrix(x)
    np.fill_diagonal(d2, np.inf)
    cur_min = d2.min()

    for _ in range(sweeps):
        for col in range(d):
            for i in range(n):
                j = int(rng.integers(n))
                if j == i:
                    continue
                xi, xj = x[i, col], x[j, col]
                x[i, col], x[j, col] = xj, xi
                row_i = _sqdist_row(x, i)
                row_j = _sqdist_row(x, j)
                new_min = _min_after_row_update(d2, row_i, row_j, i, j)
                if new_min > cur_min:
                    d2[i, :] = row_i
                    d2[:, i] = row_i
                    d2[j, :] = row_j
                    d2[:, j] = row_j
                    d2[i, i] = np.inf
                    d2[j, j] = np.inf
                    cur_min = new_min
                else:
                    x[i, col], x[j, col] = xi, xj
    return x


def augment_corners(design):
    """Append the all-zeros and all-ones corner points to a design.

    The input may be empty as long as it carries a column count; the output
    has n + 2 rows and is generally no longer a Latin hypercube.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim != 2:
        raise ValueError("design must be a 2-D array of shape (n, d)")
    d = design.shape[1]
    corners = np.vstack([np.zeros(d), np.ones(d)])
    return np.vstack([design, corners])


def _sqdist_matrix(x):
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _sqdist_row(x, i):
    diff = x - x[i]
    row = np.einsum("ij,ij->i", diff, diff)
    row[i] = np.inf
    return row


def _min_after_row_update(d2, row_i, row_j, i, j):
    # Minimum of d2 with rows/columns i and j replaced by the given rows.
    masked = d2.copy()
    masked[i, :] = row_i
    masked[:, i] = row_i
    masked[j, :] = row_j
    masked[:, j] = row_j
    masked[i, j] = masked[j, i] = row_i[j]
    masked[i, i] = masked[j, j] = np.inf
    return masked.min()

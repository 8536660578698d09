"""Numba kernels for the sum-of-trees backfitting sampler.

Trees are stored as fixed-size heaps (root at index 1, children of i at
2i and 2i+1).  `feat[i]` holds the split axis for internal nodes, -1 for
terminal nodes and -2 for unused slots; `cutidx[i]` indexes the per-axis
cutpoint grid and `leafv[i]` carries the terminal prediction.

All functions are deterministic given the numpy Generator passed in.
"""

import numpy as np
from numba import njit

MAX_DEPTH = 9
HEAP_SIZE = 1 << (MAX_DEPTH + 1)

LEAF = -1
UNUSED = -2

GROW, PRUNE, CHANGE, SWAP = 0, 1, 2, 3

_LOG2PI = float(np.log(2.0 * np.pi))

# Workspace layout: (nodes, stack, leaves, cnt, s1, s2, pts, assign, vals)
# nodes/stack/leaves are int64[HEAP_SIZE]; cnt/s1/s2 float64[HEAP_SIZE];
# pts/assign int64[n]; vals float64[n].


def make_workspace(n):
    return (
        np.empty(HEAP_SIZE, np.int64),
        np.empty(HEAP_SIZE, np.int64),
        np.empty(HEAP_SIZE, np.int64),
        np.zeros(HEAP_SIZE, np.float64),
        np.zeros(HEAP_SIZE, np.float64),
        np.zeros(HEAP_SIZE, np.float64),
        np.empty(max(n, 1), np.int64),
        np.empty(max(n, 1), np.int64),
        np.empty(max(n, 1), np.float64),
    )


@njit(cache=True)
def node_depth(i):
    d = -1
    while i > 0:
        d += 1
        i >>= 1
    return d


@njit(cache=True)
def descend(feat, cutidx, cuts, x, start):
    i = start
    while feat[i] >= 0:
        ax = feat[i]
        if x[ax] < cuts[ax, cutidx[i]]:
            i = 2 * i
        else:
            i = 2 * i + 1
    return i


@njit(cache=True)
def leaf_logml(nb, s1, s2, sig2, sm2):
    if nb <= 0.0:
        return 0.0
    v = sig2 + nb * sm2
    return (
        -0.5 * nb * (_LOG2PI + np.log(sig2))
        + 0.5 * np.log(sig2 / v)
        - s2 / (2.0 * sig2)
        + sm2 * s1 * s1 / (2.0 * sig2 * v)
    )


@njit(cache=True)
def log_psplit(depth, alpha, beta):
    return np.log(alpha) - beta * np.log(1.0 + depth)


@njit(cache=True)
def log_qsplit(depth, alpha, beta):
    return np.log(1.0 - alpha * (1.0 + depth) ** (-beta))


@njit(cache=True)
def count_leaves(feat, maxnode):
    c = 0
    for i in range(1, maxnode + 1):
        if feat[i] == LEAF:
            c += 1
    return c


@njit(cache=True)
def _collect(feat, maxnode, kind, out):
    # kind 0: leaves, 1: internal, 2: prunable (internal, both children leaves)
    c = 0
    for i in range(1, maxnode + 1):
        if kind == 0:
            if feat[i] == LEAF:
                out[c] = i
                c += 1
        else:
            if feat[i] >= 0:
                if kind == 1:
                    out[c] = i
                    c += 1
                elif feat[2 * i] == LEAF and feat[2 * i + 1] == LEAF:
                    out[c] = i
                    c += 1
    return c


@njit(cache=True)
def count_swap_pairs(feat, maxnode):
    c = 0
    for i in range(1, maxnode + 1):
        if feat[i] >= 0:
            if feat[2 * i] >= 0:
                c += 1
            if feat[2 * i + 1] >= 0:
                c += 1
    return c


@njit(cache=True)
def legal_prob_sum(feat, maxnode, pmoves):
    s = pmoves[GROW]
    if feat[1] >= 0:
        s += pmoves[PRUNE] + pmoves[CHANGE]
        if count_swap_pairs(feat, maxnode) > 0:
            s += pmoves[SWAP]
    return s


@njit(cache=True)
def _collect_subtree_leaves(feat, node, stack, leaves):
    top = 0
    stack[top] = node
    top += 1
    c = 0
    while top > 0:
        top -= 1
        i = stack[top]
        if feat[i] == LEAF:
            leaves[c] = i
            c += 1
        elif feat[i] >= 0:
            stack[top] = 2 * i
            top += 1
            stack[top] = 2 * i + 1
            top += 1
    return c


@njit(cache=True)
def _ll_for_assign(assign, na, vals, leaves, nlv, cnt, s1, s2, sig2, sm2):
    for k in range(nlv):
        j = leaves[k]
        cnt[j] = 0.0
        s1[j] = 0.0
        s2[j] = 0.0
    for t in range(na):
        j = assign[t]
        r = vals[t]
        cnt[j] += 1.0
        s1[j] += r
        s2[j] += r * r
    ll = 0.0
    empty = False
    for k in range(nlv):
        j = leaves[k]
        if cnt[j] == 0.0:
            empty = True
        ll += leaf_logml(cnt[j], s1[j], s2[j], sig2, sm2)
    return ll, empty


@njit(cache=True)
def mh_move(
    feat,
    cutidx,
    leafv,
    maxnode,
    leaf_id,
    X,
    resid,
    cuts,
    sig2,
    sm2,
    alpha,
    beta,
    pmoves,
    rng,
    force_move,
    decide,
    ws,
):
    """One Metropolis-Hastings tree-structure move.

    Returns (status, accepted, maxnode, dll, dlogprior, dlogq, move).
    status: 0 = proposal formed, 1 = requested move illegal, 2 = no valid
    proposal available (no-op).  With decide=False the proposal is left
    applied to the tree arrays (leaf_id untouched) and accepted is 0.
    """
    nodes, stack, leaves, cnt, s1a, s2a, pts, assign, vals = ws
    n = X.shape[0]
    d = X.shape[1]
    G = cuts.shape[1]

    has_internal = feat[1] >= 0
    npair = count_swap_pairs(feat, maxnode)
    sum_t = pmoves[GROW]
    if has_internal:
        sum_t += pmoves[PRUNE] + pmoves[CHANGE]
        if npair > 0:
            sum_t += pmoves[SWAP]

    if force_move >= 0:
        move = force_move
        if move == PRUNE or move == CHANGE:
            if not has_internal:
                return 1, 0, maxnode, 0.0, 0.0, 0.0, move
        elif move == SWAP:
            if npair == 0:
                return 1, 0, maxnode, 0.0, 0.0, 0.0, move
    else:
        if sum_t <= 0.0:
            return 2, 0, maxnode, 0.0, 0.0, 0.0, -1
        u = rng.random() * sum_t
        move = GROW
        acc = pmoves[GROW]
        if u >= acc and has_internal:
            acc += pmoves[PRUNE]
            if u < acc:
                move = PRUNE
            else:
                acc += pmoves[CHANGE]
                if u < acc:
                    move = CHANGE
                elif npair > 0:
                    move = SWAP
                else:
                    move = CHANGE  # unreachable when probabilities sum right
        elif u >= acc:
            # only grow is legal
            move = GROW

    dll = 0.0
    dlogprior = 0.0
    dlogq = 0.0

    if move == GROW:
        nl_count = _collect(feat, maxnode, 0, nodes)
        node = nodes[rng.integers(0, nl_count)]
        dep = node_depth(node)
        if dep >= MAX_DEPTH:
            return 2, 0, maxnode, 0.0, 0.0, 0.0, move
        axis = int(rng.integers(0, d))
        nb = 0.0
        sr = 0.0
        sr2 = 0.0
        xmin = np.inf
        xmax = -np.inf
        for t in range(n):
            if leaf_id[t] == node:
                r = resid[t]
                nb += 1.0
                sr += r
                sr2 += r * r
                v = X[t, axis]
                if v < xmin:
                    xmin = v
                if v > xmax:
                    xmax = v
        if n == 0:
            lo = 0
            navail = G
        else:
            lo = np.searchsorted(cuts[axis], xmin, side="right")
            hi = np.searchsorted(cuts[axis], xmax, side="right") - 1
            navail = hi - lo + 1
            if navail <= 0:
                return 2, 0, maxnode, 0.0, 0.0, 0.0, move
        cid = lo + int(rng.integers(0, navail))
        c = cuts[axis, cid]
        nlft = 0.0
        slft = 0.0
        s2lft = 0.0
        for t in range(n):
            if leaf_id[t] == node and X[t, axis] < c:
                r = resid[t]
                nlft += 1.0
                slft += r
                s2lft += r * r
        dll = (
            leaf_logml(nlft, slft, s2lft, sig2, sm2)
            + leaf_logml(nb - nlft, sr - slft, sr2 - s2lft, sig2, sm2)
            - leaf_logml(nb, sr, sr2, sig2, sm2)
        )
        dlogprior = (
            log_psplit(dep, alpha, beta)
            + 2.0 * log_qsplit(dep + 1, alpha, beta)
            - log_qsplit(dep, alpha, beta)
            - np.log(d * 1.0 * G)
        )
        # apply
        feat[node] = axis
        cutidx[node] = cid
        feat[2 * node] = LEAF
        feat[2 * node + 1] = LEAF
        leafv[2 * node] = leafv[node]
        leafv[2 * node + 1] = leafv[node]
        new_maxnode = maxnode if maxnode >= 2 * node + 1 else 2 * node + 1
        prunable2 = _collect(feat, new_maxnode, 2, stack)
        sum_t2 = legal_prob_sum(feat, new_maxnode, pmoves)
        dlogq = (
            np.log(pmoves[PRUNE] / sum_t2)
            - np.log(1.0 * prunable2)
            - np.log(pmoves[GROW] / sum_t)
            + np.log(1.0 * nl_count)
            + np.log(1.0 * d)
            + np.log(1.0 * navail)
        )
        if not decide:
            return 0, 0, new_maxnode, dll, dlogprior, dlogq, move
        if np.log(rng.random()) < dll + dlogprior + dlogq:
            for t in range(n):
                if leaf_id[t] == node:
                    if X[t, axis] < c:
                        leaf_id[t] = 2 * node
                    else:
                        leaf_id[t] = 2 * node + 1
            return 0, 1, new_maxnode, dll, dlogprior, dlogq, move
        feat[node] = LEAF
        feat[2 * node] = UNUSED
        feat[2 * node + 1] = UNUSED
        return 0, 0, maxnode, dll, dlogprior, dlogq, move

    if move == PRUNE:
        pr_count = _collect(feat, maxnode, 2, nodes)
        node = nodes[rng.integers(0, pr_count)]
        axis = feat[node]
        cid = cutidx[node]
        lc = 2 * node
        rc = 2 * node + 1
        nlft = 0.0
        slft = 0.0
        s2lft = 0.0
        nrgt = 0.0
        srgt = 0.0
        s2rgt = 0.0
        xmin = np.inf
        xmax = -np.inf
        for t in range(n):
            j = leaf_id[t]
            if j == lc or j == rc:
                r = resid[t]
                if j == lc:
                    nlft += 1.0
                    slft += r
                    s2lft += r * r
                else:
                    nrgt += 1.0
                    srgt += r
                    s2rgt += r * r
                v = X[t, axis]
                if v < xmin:
                    xmin = v
                if v > xmax:
                    xmax = v
        dll = (
            leaf_logml(nlft + nrgt, slft + srgt, s2lft + s2rgt, sig2, sm2)
            - leaf_logml(nlft, slft, s2lft, sig2, sm2)
            - leaf_logml(nrgt, srgt, s2rgt, sig2, sm2)
        )
        dep = node_depth(node)
        dlogprior = (
            log_qsplit(dep, alpha, beta)
            - log_psplit(dep, alpha, beta)
            - 2.0 * log_qsplit(dep + 1, alpha, beta)
            + np.log(d * 1.0 * G)
        )
        # apply
        feat[node] = LEAF
        feat[lc] = UNUSED
        feat[rc] = UNUSED
        new_maxnode = maxnode
        while new_maxnode > 1 and feat[new_maxnode] == UNUSED:
            new_maxnode -= 1
        if n == 0:
            navail = G
        else:
            lo = np.searchsorted(cuts[axis], xmin, side="right")
            hi = np.searchsorted(cuts[axis], xmax, side="right") - 1
            navail = hi - lo + 1
        leaves2 = _collect(feat, new_maxnode, 0, stack)
        sum_t2 = legal_prob_sum(feat, new_maxnode, pmoves)
        dlogq = (
            np.log(pmoves[GROW] / sum_t2)
            - np.log(1.0 * leaves2)
            - np.log(1.0 * d)
            - np.log(1.0 * navail)
            - np.log(pmoves[PRUNE] / sum_t)
            + np.log(1.0 * pr_count)
        )
        if not decide:
            return 0, 0, new_maxnode, dll, dlogprior, dlogq, move
        if np.log(rng.random()) < dll + dlogprior + dlogq:
            for t in range(n):
                j = leaf_id[t]
                if j == lc or j == rc:
                    leaf_id[t] = node
            return 0, 1, new_maxnode, dll, dlogprior, dlogq, move
        feat[node] = axis
        feat[lc] = LEAF
        feat[rc] = LEAF
        return 0, 0, maxnode, dll, dlogprior, dlogq, move

    # CHANGE and SWAP share the subtree re-routing machinery.
    node = 0
    old_axis = 0
    old_cid = 0
    new_axis = 0
    new_cid = 0
    parent = 0
    child = 0
    if move == CHANGE:
        in_count = _collect(feat, maxnode, 1, nodes)
        node = int(nodes[rng.integers(0, in_count)])
        old_axis = int(feat[node])
        old_cid = int(cutidx[node])
        new_axis = int(rng.integers(0, d))
        new_cid = int(rng.integers(0, G))
        top = node
    else:  # SWAP
        cpair = 0
        for i in range(1, maxnode + 1):
            if feat[i] >= 0:
                if feat[2 * i] >= 0:
                    nodes[cpair] = 2 * i
                    cpair += 1
                if feat[2 * i + 1] >= 0:
                    nodes[cpair] = 2 * i + 1
                    cpair += 1
        child = int(nodes[rng.integers(0, cpair)])
        parent = child // 2
        top = parent

    # collect affected points and subtree leaves
    na = 0
    for t in range(n):
        a = leaf_id[t]
        while a > top:
            a >>= 1
        if a == top:
            pts[na] = t
            vals[na] = resid[t]
            assign[na] = leaf_id[t]
            na += 1
    nlv = _collect_subtree_leaves(feat, top, stack, leaves)
    old_ll, _ = _ll_for_assign(assign, na, vals, leaves, nlv, cnt, s1a, s2a, sig2, sm2)

    if move == CHANGE:
        feat[node] = new_axis
        cutidx[node] = new_cid
    else:
        pa = feat[parent]
        pc = cutidx[parent]
        feat[parent] = feat[child]
        cutidx[parent] = cutidx[child]
        feat[child] = pa
        cutidx[child] = pc

    for k in range(na):
        t = pts[k]
        assign[k] = descend(feat, cutidx, cuts, X[t], top)
    new_ll, empty = _ll_for_assign(assign, na, vals, leaves, nlv, cnt, s1a, s2a, sig2, sm2)

    reject_outright = empty and n > 0
    dll = new_ll - old_ll
    if not decide:
        if reject_outright:
            # restore and report no valid proposal
            if move == CHANGE:
                feat[node] = old_axis
                cutidx[node] = old_cid
            else:
                pa, pc = feat[parent], cutidx[parent]
                feat[parent], cutidx[parent] = feat[child], cutidx[child]
                feat[child], cutidx[child] = pa, pc
            return 2, 0, maxnode, 0.0, 0.0, 0.0, move
        return 0, 0, maxnode, dll, 0.0, 0.0, move

    if not reject_outright and np.log(rng.random()) < dll:
        for k in range(na):
            leaf_id[pts[k]] = assign[k]
        return 0, 1, maxnode, dll, 0.0, 0.0, move

    if move == CHANGE:
        feat[node] = old_axis
        cutidx[node] = old_cid
    else:
        pa = feat[parent]
        pc = cutidx[parent]
        feat[parent] = feat[child]
        cutidx[parent] = cutidx[child]
        feat[child] = pa
        cutidx[child] = pc
    return 0, 0, maxnode, dll, 0.0, 0.0, move


@njit(cache=True)
def draw_leaf_values_inplace(feat, leafv, maxnode, leaf_id, resid, sig2, sm2, rng, cnt, s1a):
    for i in range(1, maxnode + 1):
        if feat[i] == LEAF:
            cnt[i] = 0.0
            s1a[i] = 0.0
    n = leaf_id.shape[0]
    for t in range(n):
        j = leaf_id[t]
        cnt[j] += 1.0
        s1a[j] += resid[t]
    for i in range(1, maxnode + 1):
        if feat[i] == LEAF:
            if sm2 == 0.0:
                leafv[i] = 0.0
            else:
                v = sig2 + cnt[i] * sm2
                mean = sm2 * s1a[i] / v
                sd = np.sqrt(sig2 * sm2 / v)
                leafv[i] = mean + sd * rng.standard_normal()


@njit(cache=True)
def draw_sigma2_kernel(sse, n, nu, lam, rng):
    chi2 = 2.0 * rng.gamma(0.5 * (nu + n), 1.0)
    return (nu * lam + sse) / chi2


@njit(cache=True)
def sweep(
    feat,
    cutidx,
    leafv,
    maxnodes,
    leaf_id,
    fit,
    X,
    y,
    allfit,
    cuts,
    sig2,
    sm2,
    nu,
    lam,
    alpha,
    beta,
    pmoves,
    rng,
    resid,
    ws,
):
    """One backfitting pass over all trees plus a sigma^2 draw.

    Returns the new sigma^2.  `allfit` and `fit` are updated in place.
    """
    m = feat.shape[0]
    n = X.shape[0]
    for t in range(m):
        for i in range(n):
            resid[i] = y[i] - allfit[i] + fit[t, i]
        _, _, mm, _, _, _, _ = mh_move(
            feat[t],
            cutidx[t],
            leafv[t],
            maxnodes[t],
            leaf_id[t],
            X,
            resid,
            cuts,
            sig2,
            sm2,
            alpha,
            beta,
            pmoves,
            rng,
            -1,
            True,
            ws,
        )
        maxnodes[t] = mm
        draw_leaf_values_inplace(
            feat[t], leafv[t], mm, leaf_id[t], resid, sig2, sm2, rng, ws[3], ws[4]
        )
        for i in range(n):
            newfit = leafv[t, leaf_id[t, i]]
            allfit[i] += newfit - fit[t, i]
            fit[t, i] = newfit
    sse = 0.0
    for i in range(n):
        e = y[i] - allfit[i]
        sse += e * e
    return draw_sigma2_kernel(sse, n, nu, lam, rng)


@njit(cache=True)
def ensemble_predict_points(feat, cutidx, leafv, cuts, P, out):
    m = feat.shape[0]
    npts = P.shape[0]
    for i in range(npts):
        out[i] = 0.0
    for t in range(m):
        ft = feat[t]
        ct = cutidx[t]
        lv = leafv[t]
        for i in range(npts):
            j = 1
            while ft[j] >= 0:
                ax = ft[j]
                if P[i, ax] < cuts[ax, ct[j]]:
                    j = 2 * j
                else:
                    j = 2 * j + 1
            out[i] += lv[j]


@njit(cache=True)
def prior_shape_chain(cuts, n_sweeps, alpha, beta, pmoves, rng):
    """Structure-only chain (no data): per-sweep terminal node counts."""
    d = cuts.shape[0]
    feat = np.full(HEAP_SIZE, UNUSED, np.int64)
    feat[1] = LEAF
    cutidx = np.zeros(HEAP_SIZE, np.int64)
    leafv = np.zeros(HEAP_SIZE, np.float64)
    X = np.zeros((0, d), np.float64)
    leaf_id = np.zeros(0, np.int64)
    resid = np.zeros(0, np.float64)
    ws = (
        np.empty(HEAP_SIZE, np.int64),
        np.empty(HEAP_SIZE, np.int64),
        np.empty(HEAP_SIZE, np.int64),
        np.zeros(HEAP_SIZE, np.float64),
        np.zeros(HEAP_SIZE, np.float64),
        np.zeros(HEAP_SIZE, np.float64),
        np.empty(1, np.int64),
        np.empty(1, np.int64),
        np.empty(1, np.float64),
    )
    maxnode = 1
    counts = np.empty(n_sweeps, np.int64)
    for s in range(n_sweeps):
        _, _, maxnode, _, _, _, _ = mh_move(
            feat,
            cutidx,
            leafv,
            maxnode,
            leaf_id,
            X,
            resid,
            cuts,
            1.0,
            1.0,
            alpha,
            beta,
            pmoves,
            rng,
            -1,
            True,
            ws,
        )
        counts[s] = count_leaves(feat, maxnode)
    return counts

"""Compiled coordinate-descent kernel for the weighted least-squares subproblem."""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _sweep(X, w, r, beta, b0, v, pen, idx, n_idx, inv_n):
    """One pass over the intercept and coordinates ``idx[:n_idx]``.

    Minimises ``(1/2N) sum w (r)^2 + sum pen_j |beta_j|`` where ``r`` is the
    working residual, updated in place. Returns the new intercept and the
    largest weighted squared step.
    """
    N = X.shape[0]
    sw = 0.0
    swr = 0.0
    for i in range(N):
        sw += w[i]
        swr += w[i] * r[i]
    d = swr / sw
    b0 += d
    for i in range(N):
        r[i] -= d
    dmax = sw * inv_n * d * d
    for k in range(n_idx):
        j = idx[k]
        g = 0.0
        for i in range(N):
            g += w[i] * X[i, j] * r[i]
        g = g * inv_n + v[j] * beta[j]
        new = _soft(g, pen[j]) / v[j]
        delta = new - beta[j]
        if delta != 0.0:
            for i in range(N):
                r[i] -= delta * X[i, j]
            beta[j] = new
            step = v[j] * delta * delta
            if step > dmax:
                dmax = step
    return b0, dmax


@njit(cache=True)
def cd_wls(X, w, r, beta, b0, pen, usable, thresh, max_sweeps):
    """Solve the penalised weighted least-squares problem to ``thresh``.

    Active-set scheme: a full sweep, then sweeps over the nonzero set until
    converged, then a full sweep to confirm nothing new enters. ``usable``
    masks out columns that are never allowed to move (zero variance).
    Returns ``(b0, sweeps)``; ``sweeps == max_sweeps`` signals non-convergence.
    """
    N, p = X.shape
    inv_n = 1.0 / N
    v = np.zeros(p)
    for j in range(p):
        if usable[j]:
            s = 0.0
            for i in range(N):
                s += w[i] * X[i, j] * X[i, j]
            v[j] = s * inv_n
    full = np.empty(p, np.int64)
    n_full = 0
    for j in range(p):
        if usable[j] and v[j] > 0.0:
            full[n_full] = j
            n_full += 1
    act = np.empty(p, np.int64)
    sweeps = 0
    while sweeps < max_sweeps:
        b0, dmax = _sweep(X, w, r, beta, b0, v, pen, full, n_full, inv_n)
        sweeps += 1
        if dmax < thresh:
            break
        n_act = 0
        for k in range(n_full):
            j = full[k]
            if beta[j] != 0.0:
                act[n_act] = j
                n_act += 1
        while sweeps < max_sweeps:
            b0, dmax = _sweep(X, w, r, beta, b0, v, pen, act, n_act, inv_n)
            sweeps += 1
            if dmax < thresh:
                break
    return b0, sweeps


@njit(cache=True)
def _gram_sweep(G, q, beta, pen, idx, n_idx):
    dmax = 0.0
    p = G.shape[0]
    for k in range(n_idx):
        j = idx[k]
        gjj = G[j, j]
        new = _soft(q[j] + gjj * beta[j], pen[j]) / gjj
        delta = new - beta[j]
        if delta != 0.0:
            for i in range(p):
                q[i] -= G[j, i] * delta  # G is symmetric; row access is contiguous
            beta[j] = new
            step = gjj * delta * delta
            if step > dmax:
                dmax = step
    return dmax


@njit(cache=True)
def cd_gram(G, q, beta, pen, usable, thresh, max_sweeps):
    """Covariance-mode coordinate descent on ``1/2 b'Gb - c'b + sum pen_j |b_j|``.

    ``q = c - G beta`` is kept current in place. Same active-set scheme as
    :func:`cd_wls`; cheaper per sweep once many coordinates are nonzero.
    """
    p = G.shape[0]
    full = np.empty(p, np.int64)
    n_full = 0
    for j in range(p):
        if usable[j] and G[j, j] > 0.0:
            full[n_full] = j
            n_full += 1
    act = np.empty(p, np.int64)
    sweeps = 0
    while sweeps < max_sweeps:
        dmax = _gram_sweep(G, q, beta, pen, full, n_full)
        sweeps += 1
        if dmax < thresh:
            break
        n_act = 0
        for k in range(n_full):
            j = full[k]
            if beta[j] != 0.0:
                act[n_act] = j
                n_act += 1
        while sweeps < max_sweeps:
            dmax = _gram_sweep(G, q, beta, pen, act, n_act)
            sweeps += 1
            if dmax < thresh:
                break
    return sweeps

"""Inner loops of the estimator.

Two kernels dominate runtime: the masked Bernoulli log-likelihood with its
residuals ``A - p`` (evaluated at every line-search trial), and K-means
(Lloyd iterations followed by single-point transfers). Each has an explicit-loop version compiled by numba
and a vectorised numpy twin. ``loglik_residual``, ``lloyd`` and ``transfer`` are bound to
one of the two according to :data:`dynrep._accel.NUMBA_ENABLED`; both
variants stay importable for benchmarking and parity tests.
"""

import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit

__all__ = [
    "BACKEND",
    "loglik_residual",
    "lloyd",
    "loglik_residual_numpy",
    "loglik_residual_numba",
    "lloyd_numpy",
    "lloyd_numba",
    "transfer",
    "transfer_numpy",
    "transfer_numba",
]


def _loglik_residual_loops(alpha, beta, adj, mask):
    n, M, R = alpha.shape
    bt = np.ascontiguousarray(beta.T)
    resid = np.zeros((n, M, M))
    e = np.empty(M)
    ll = 0.0
    for i in range(n):
        for j in range(M):
            e[:] = 0.0
            for r in range(R):
                a_jr = alpha[i, j, r]
                for k in range(M):
                    e[k] += a_jr * bt[r, k]
            # branch-free body so the k-loop vectorises; masked entries get weight 0
            for k in range(M):
                x = e[k]
                z = math.exp(-abs(x))
                inv = 1.0 / (1.0 + z)
                p = inv if x >= 0.0 else z * inv
                softplus = max(x, 0.0) + math.log1p(z)
                w = 1.0 if mask[i, j, k] else 0.0
                a = float(adj[i, j, k])
                ll += w * (a * x - softplus)
                resid[i, j, k] = w * (a - p)
    return ll, resid


def loglik_residual_numpy(alpha, beta, adj, mask):
    """Masked Bernoulli log-likelihood and residual tensor.

    Parameters
    ----------
    alpha : ndarray, shape (n, M, R)
        Outgoing embeddings evaluated at the observation times.
    beta : ndarray, shape (M, R)
        Receiving embeddings.
    adj : ndarray of uint8, shape (n, M, M)
    mask : ndarray of bool, shape (n, M, M)

    Returns
    -------
    ll : float
        ``sum(mask * (A * eta - log(1 + exp(eta))))``.
    resid : ndarray, shape (n, M, M)
        ``mask * (A - p)``; zero where unobserved.
    """
    eta = alpha @ beta.T
    z = np.exp(-np.abs(eta))
    p = np.where(eta >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))
    softplus = np.maximum(eta, 0.0) + np.log1p(z)
    a = adj.astype(np.float64)
    ll = float(np.sum(np.where(mask, a * eta - softplus, 0.0)))
    resid = np.where(mask, a - p, 0.0)
    return ll, resid


def _sq_dist(x, c):
    s = 0.0
    for q in range(x.shape[0]):
        d = x[q] - c[q]
        s += d * d
    return s


def _lloyd_loops(X, centers, max_iter):
    M, P = X.shape
    L = centers.shape[0]
    C = centers.copy()
    labels = np.full(M, -1, dtype=np.int64)
    dmin = np.zeros(M)
    for it in range(max_iter + 1):
        changed = False
        for j in range(M):
            best = 0
            bd = _sq_dist(X[j], C[0])
            for l in range(1, L):
                d = _sq_dist(X[j], C[l])
                if d < bd:
                    bd = d
                    best = l
            dmin[j] = bd
            if labels[j] != best:
                changed = True
                labels[j] = best
        if not changed or it == max_iter:
            break
        sums = np.zeros((L, P))
        counts = np.zeros(L, dtype=np.int64)
        for j in range(M):
            counts[labels[j]] += 1
            for q in range(P):
                sums[labels[j], q] += X[j, q]
        taken = np.zeros(M, dtype=np.bool_)
        for l in range(L):
            if counts[l] > 0:
                for q in range(P):
                    C[l, q] = sums[l, q] / counts[l]
            else:
                far = -1
                fd = -1.0
                for j in range(M):
                    if not taken[j] and dmin[j] > fd:
                        fd = dmin[j]
                        far = j
                taken[far] = True
                for q in range(P):
                    C[l, q] = X[far, q]
    inertia = 0.0
    for j in range(M):
        inertia += dmin[j]
    return C, labels, inertia


def lloyd_numpy(X, centers, max_iter):
    """Lloyd iterations from ``centers`` until the assignment stabilises.

    Ties go to the lowest center index. An empty cluster is re-seeded at the
    point farthest from its current center (each point used at most once per
    update).

    Returns
    -------
    centers : ndarray, shape (L, P)
    labels : ndarray of int64, shape (M,)
    inertia : float
        Sum of squared distances of points to their assigned centers.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.array(centers, dtype=np.float64, copy=True)
    M = X.shape[0]
    L = C.shape[0]
    labels = np.full(M, -1, dtype=np.int64)
    dmin = np.zeros(M)
    for it in range(max_iter + 1):
        d = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d, axis=1)
        dmin = d[np.arange(M), new]
        changed = bool(np.any(new != labels))
        labels = new
        if not changed or it == max_iter:
            break
        counts = np.bincount(labels, minlength=L)
        taken = np.zeros(M, dtype=bool)
        for l in range(L):
            if counts[l] > 0:
                C[l] = X[labels == l].mean(axis=0)
            else:
                far = int(np.argmax(np.where(taken, -1.0, dmin)))
                taken[far] = True
                C[l] = X[far]
    return C, labels.astype(np.int64), float(dmin.sum())


def _transfer_loops(X, labels, L, max_sweeps):
    M, P = X.shape
    labels = labels.copy()
    counts = np.zeros(L)
    sums = np.zeros((L, P))
    for j in range(M):
        counts[labels[j]] += 1.0
        for q in range(P):
            sums[labels[j], q] += X[j, q]
    d = np.empty(L)
    for _ in range(max_sweeps):
        moved = False
        for j in range(M):
            a = labels[j]
            if counts[a] <= 1.0:
                continue
            for l in range(L):
                s = 0.0
                c = max(counts[l], 1.0)
                for q in range(P):
                    diff = X[j, q] - sums[l, q] / c
                    s += diff * diff
                d[l] = s
            b = -1
            gb = np.inf
            for l in range(L):
                if l == a:
                    continue
                g = 0.0 if counts[l] == 0.0 else counts[l] / (counts[l] + 1.0) * d[l]
                if g < gb:
                    gb = g
                    b = l
            remove = counts[a] / (counts[a] - 1.0) * d[a]
            if b >= 0 and gb < remove * (1.0 - 1e-12):
                counts[a] -= 1.0
                counts[b] += 1.0
                for q in range(P):
                    sums[a, q] -= X[j, q]
                    sums[b, q] += X[j, q]
                labels[j] = b
                moved = True
        if not moved:
            break
    C = np.empty((L, P))
    for l in range(L):
        c = max(counts[l], 1.0)
        for q in range(P):
            C[l, q] = sums[l, q] / c
    return C, labels


def transfer_numpy(X, labels, L, max_sweeps=100):
    """Single-point transfers that strictly lower the within-cluster scatter.

    Moving ``x`` from cluster ``a`` to ``b`` changes the scatter by
    ``n_b/(n_b+1) |x-c_b|^2 - n_a/(n_a-1) |x-c_a|^2``. Lloyd compares only
    the unweighted distances, so it can stop where such a move still helps.
    Points are visited in index order; each goes to its best cluster (lowest
    index on ties).

    Returns
    -------
    centers : ndarray, shape (L, P)
        Member means (zero rows for empty clusters).
    labels : ndarray of int64, shape (M,)
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.array(labels, dtype=np.int64, copy=True)
    counts = np.bincount(labels, minlength=L).astype(np.float64)
    sums = np.zeros((L, X.shape[1]))
    np.add.at(sums, labels, X)
    for _ in range(max_sweeps):
        moved = False
        for j in range(X.shape[0]):
            a = labels[j]
            if counts[a] <= 1.0:
                continue
            d = ((X[j] - sums / np.maximum(counts, 1.0)[:, None]) ** 2).sum(axis=1)
            gain = np.where(counts == 0.0, 0.0, counts / (counts + 1.0) * d)
            gain[a] = np.inf
            b = int(np.argmin(gain))
            if gain[b] < counts[a] / (counts[a] - 1.0) * d[a] * (1.0 - 1e-12):
                counts[a] -= 1.0
                counts[b] += 1.0
                sums[a] -= X[j]
                sums[b] += X[j]
                labels[j] = b
                moved = True
        if not moved:
            break
    return sums / np.maximum(counts, 1.0)[:, None], labels


_loglik_residual_jit = njit(_loglik_residual_loops, fastmath=True)
_sq_dist = njit(_sq_dist)
_lloyd_jit = njit(_lloyd_loops)
_transfer_jit = njit(_transfer_loops)


def loglik_residual_numba(alpha, beta, adj, mask):
    return _loglik_residual_jit(
        np.ascontiguousarray(alpha, dtype=np.float64),
        np.ascontiguousarray(beta, dtype=np.float64),
        np.ascontiguousarray(adj, dtype=np.uint8),
        np.ascontiguousarray(mask, dtype=np.bool_),
    )


def lloyd_numba(X, centers, max_iter):
    C, labels, inertia = _lloyd_jit(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(centers, dtype=np.float64),
        int(max_iter),
    )
    return C, labels, float(inertia)


def transfer_numba(X, labels, L, max_sweeps=100):
    return _transfer_jit(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(labels, dtype=np.int64),
        int(L),
        int(max_sweeps),
    )


if NUMBA_ENABLED:
    BACKEND = "numba"
    loglik_residual = loglik_residual_numba
    lloyd = lloyd_numba
    transfer = transfer_numba
else:
    BACKEND = "numpy"
    loglik_residual = loglik_residual_numpy
    lloyd = lloyd_numpy
    transfer = transfer_numpy

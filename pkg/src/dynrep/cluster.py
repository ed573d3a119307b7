"""K-means for static receiving vectors and for spline-coefficient trajectories.

The functional variant clusters coefficient blocks ``(R, D)`` under the metric
``sum_r (u_r - v_r)^T G (u_r - v_r)``. Writing ``G = C C^T`` turns that into a
plain Euclidean problem on ``u_r^T C``, so both variants share one Lloyd
kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = ["KMeansResult", "kmeans_euclidean", "kmeans_functional", "kmeans_objective"]


@dataclass(eq=False)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float


def _plusplus(X: np.ndarray, L: int, rng: np.random.Generator) -> np.ndarray:
    M = X.shape[0]
    idx = [int(rng.integers(M))]
    d = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, L):
        total = d.sum()
        if total > 0.0:
            nxt = int(rng.choice(M, p=d / total))
        else:
            nxt = int(rng.integers(M))
        idx.append(nxt)
        d = np.minimum(d, ((X - X[nxt]) ** 2).sum(axis=1))
    return X[idx].copy()


def _check(M: int, L: int, restarts: int):
    if L < 1:
        raise ValueError(f"number of clusters must be positive, got {L}")
    if L > M:
        raise ValueError(f"number of clusters L={L} exceeds number of points M={M}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")


def _best_lloyd(X, L, restarts, seed, init, max_iter, score):
    """Run Lloyd, then single-point transfers, from ``init`` (if given) and
    ``restarts`` k-means++ seeds.

    ``score(labels)`` is the objective used to pick the winner; earlier runs
    win ties, so a warm start is never replaced by an equally good restart.
    """
    rng = np.random.default_rng(seed)
    starts = [] if init is None else [np.asarray(init, dtype=np.float64)]
    starts += [None] * restarts
    best = None
    for c0 in starts:
        if c0 is None:
            c0 = _plusplus(X, L, rng)
        C, labels, _ = kernels.lloyd(X, c0, max_iter)
        C, labels = kernels.transfer(X, labels, L)
        s = score(labels)
        if best is None or s < best[2]:
            best = (C, labels, s)
    return best


def kmeans_objective(points: np.ndarray, labels: np.ndarray, gram: np.ndarray | None = None) -> float:
    """Within-cluster scatter of ``points`` around their member means.

    ``points`` is ``(M, P)`` for the Euclidean metric or ``(M, R, D)`` with a
    ``(D, D)`` Gram matrix for the functional one.
    """
    total = 0.0
    for l in np.unique(labels):
        diff = points[labels == l] - points[labels == l].mean(axis=0)
        if gram is None:
            total += float(np.sum(diff**2))
        else:
            total += float(np.sum((diff @ gram) * diff))
    return total


def kmeans_euclidean(
    points: np.ndarray,
    L: int,
    restarts: int = 10,
    seed: int = 0,
    init_centers: np.ndarray | None = None,
    max_iter: int = 300,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ restarts, best run by scatter."""
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    _check(X.shape[0], L, restarts)
    C, labels, s = _best_lloyd(
        X, L, restarts, seed, init_centers, max_iter, lambda lab: kmeans_objective(X, lab)
    )
    for l in range(L):
        if np.any(labels == l):
            C[l] = X[labels == l].mean(axis=0)
    return KMeansResult(C.reshape((L,) + np.shape(points)[1:]), labels, s)


def kmeans_functional(
    coeffs: np.ndarray,
    gram: np.ndarray,
    L: int,
    restarts: int = 10,
    seed: int = 0,
    init_centers: np.ndarray | None = None,
    max_iter: int = 300,
) -> KMeansResult:
    """K-means on coefficient blocks ``(M, R, D)`` under the Gram metric.

    Centers are the arithmetic means of member coefficients, which minimise
    the scatter for fixed assignments because ``gram`` is positive definite.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    M, R, D = coeffs.shape
    _check(M, L, restarts)
    chol = np.linalg.cholesky(gram)
    X = np.ascontiguousarray((coeffs @ chol).reshape(M, R * D))
    init = None
    if init_centers is not None:
        init = (np.asarray(init_centers, dtype=np.float64) @ chol).reshape(L, R * D)
    C, labels, s = _best_lloyd(
        X, L, restarts, seed, init, max_iter, lambda lab: kmeans_objective(coeffs, lab, gram)
    )
    # back-transform, then use exact member means wherever a cluster is nonempty
    theta = np.linalg.solve(chol.T, C.reshape(L, R, D).transpose(0, 2, 1)).transpose(0, 2, 1)
    for l in range(L):
        if np.any(labels == l):
            theta[l] = coeffs[labels == l].mean(axis=0)
    return KMeansResult(np.ascontiguousarray(theta), labels, s)

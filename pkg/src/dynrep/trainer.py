"""Alternating estimation: gradient ascent on ``gamma`` then ``beta``, with
periodic K-means refreshes of the cluster centers."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cluster import KMeansResult, kmeans_euclidean, kmeans_functional
from .model import (
    ClusterState,
    EmbeddingModel,
    Penalties,
    _grad_beta_all,
    _grad_gamma_all,
    _penalized,
    alphas_from_design,
    penalty_terms,
)
from .network import DynamicNetwork
from .spline import BasisSystem, design_matrix

__all__ = ["TrainConfig", "TrainReport", "TrainingError", "init_model", "fit", "cluster_at_time"]


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    penalties: Penalties = field(default_factory=Penalties)
    a_alpha: float = 0.2
    a_beta: float = 0.2
    max_iters: int = 1000
    tol: float = 1e-7
    kmeans_restarts: int = 10
    kmeans_every: int = 5
    seed: int = 0
    init_scale: float = 0.1
    max_halvings: int = 30
    verbose: bool = False

    def __post_init__(self):
        if not (self.a_alpha > 0 and self.a_beta > 0):
            raise ValueError("learning rates must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.kmeans_restarts < 1:
            raise ValueError("kmeans_restarts must be at least 1")
        if self.kmeans_every < 1:
            raise ValueError("kmeans_every must be at least 1")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be non-negative")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "penalties"}
        d["penalties"] = self.penalties.as_dict()
        return d


@dataclass(eq=False)
class TrainReport:
    objective_history: list[float]
    iterations_run: int
    converged: bool
    clusters: ClusterState
    penalty_sums: dict

    @property
    def curvature_norm(self) -> float:
        """Total squared second-derivative norm of the fitted outgoing embeddings."""
        return self.penalty_sums["lam_a2"]

    def to_dict(self) -> dict:
        return {
            "objective_history": list(self.objective_history),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "curvature_norm": self.curvature_norm,
            "penalty_sums": dict(self.penalty_sums),
            "clusters": self.clusters.to_dict(),
        }


def _clusters_from(out: KMeansResult, inn: KMeansResult) -> ClusterState:
    return ClusterState(out.centers, inn.centers, out.labels, inn.labels, out.inertia, inn.inertia)


def init_model(
    net: DynamicNetwork,
    R: int,
    basis: BasisSystem,
    seed: int = 0,
    init_scale: float = 0.1,
    L_out: int = 1,
    L_in: int = 1,
    restarts: int = 10,
) -> tuple[EmbeddingModel, ClusterState]:
    """I.i.d. ``N(0, init_scale^2)`` coefficients, centers from K-means on them."""
    if R < 1:
        raise ValueError(f"R must be at least 1, got {R}")
    rng = np.random.default_rng(seed)
    gamma = rng.normal(0.0, init_scale, size=(net.M, R, basis.D))
    beta = rng.normal(0.0, init_scale, size=(net.M, R))
    with np.errstate(over="ignore"):
        overflow = not np.isfinite(np.sum(gamma**2) + np.sum(beta**2))
    if overflow:
        raise TrainingError("initial embeddings overflow; use a smaller init scale")
    model = EmbeddingModel(basis, gamma, beta, net.labels)
    out = kmeans_functional(gamma, basis.gram, L_out, restarts, seed=[seed, 1])
    inn = kmeans_euclidean(beta, L_in, restarts, seed=[seed, 2])
    return model, _clusters_from(out, inn)


class _State:
    """Model plus cached likelihood pieces at the current parameters."""

    def __init__(self, model, net, B, pen, clusters):
        self.model = model
        self.net = net
        self.B = B
        self.pen = pen
        self.clusters = clusters
        self.ll, self.resid, self.alpha = self._loglik(model.gamma, model.beta)
        self.obj = _penalized(self.ll, model, pen, clusters)

    def _loglik(self, gamma, beta):
        alpha = alphas_from_design(gamma, self.B)
        ll, resid = kernels.loglik_residual(alpha, beta, self.net.snapshots, self.net.mask)
        return ll, resid, alpha

    def step(self, which: str, grad: np.ndarray, rate: float, max_halvings: int) -> float:
        """Backtracking ascent step; accepts only trials that do not lower the objective.

        Returns the accepted rate, or 0.0 if every halving was rejected.
        """
        base = getattr(self.model, which)
        all_bad = True
        for _ in range(max_halvings + 1):
            trial = base + rate * grad
            gamma = trial if which == "gamma" else self.model.gamma
            beta = trial if which == "beta" else self.model.beta
            ll, resid, alpha = self._loglik(gamma, beta)
            cand = EmbeddingModel(self.model.basis, gamma, beta, self.model.node_labels)
            obj = _penalized(ll, cand, self.pen, self.clusters)
            if math.isfinite(obj):
                all_bad = False
                if obj >= self.obj:
                    self.model, self.ll, self.resid, self.alpha, self.obj = cand, ll, resid, alpha, obj
                    return rate
            rate *= 0.5
        if all_bad:
            raise TrainingError(
                f"objective became non-finite during the {which} update; "
                "try smaller learning rates (--lr-alpha/--lr-beta) or a smaller init scale"
            )
        return 0.0

    def refresh_clusters(self, restarts: int, seed) -> bool:
        m, c = self.model, self.clusters
        out = kmeans_functional(m.gamma, m.basis.gram, c.L_out, restarts, seed=seed + [1], init_centers=c.theta)
        inn = kmeans_euclidean(m.beta, c.L_in, restarts, seed=seed + [2], init_centers=c.zeta)
        cand = _clusters_from(out, inn)
        obj = _penalized(self.ll, m, self.pen, cand)
        if obj >= self.obj:
            self.clusters, self.obj = cand, obj
            return True
        return False


def fit(
    net: DynamicNetwork,
    config: TrainConfig,
    R: int,
    basis: BasisSystem,
    L_out: int,
    L_in: int,
    init: tuple[EmbeddingModel, ClusterState] | None = None,
) -> tuple[EmbeddingModel, TrainReport]:
    """Maximise the penalized likelihood by alternating updates.

    Each iteration takes one backtracking gradient step on all ``gamma``
    (rate ``a_alpha``, halved up to ``max_halvings`` times until the
    objective does not decrease), then one on all ``beta`` using the new
    ``gamma``. Every ``kmeans_every`` iterations the assignments and centers
    are refreshed by K-means warm-started from the current centers. The
    recorded objective is therefore non-decreasing.

    Stops when the relative objective change drops below ``tol`` or after
    ``max_iters`` iterations.
    """
    if L_out > net.M or L_in > net.M:
        raise ValueError(f"cluster counts ({L_out}, {L_in}) exceed number of nodes {net.M}")
    if init is None:
        model, clusters = init_model(
            net, R, basis, config.seed, config.init_scale, L_out, L_in, config.kmeans_restarts
        )
    else:
        model, clusters = init[0].copy(), init[1].copy()
    B = design_matrix(basis, net.times)
    st = _State(model, net, B, config.penalties, clusters)
    if not math.isfinite(st.obj):
        raise TrainingError(
            "initial objective is non-finite; try a smaller init scale or smaller learning rates"
        )
    history = [st.obj]
    converged = False
    it = 0
    # each search starts at twice the last accepted rate, capped at the configured one
    rate_a, rate_b = config.a_alpha, config.a_beta
    for it in range(1, config.max_iters + 1):
        prev = st.obj
        g = _grad_gamma_all(st.model, st.resid, B, st.pen, st.clusters)
        got = st.step("gamma", g, rate_a, config.max_halvings)
        rate_a = min(config.a_alpha, 2.0 * got) if got > 0 else config.a_alpha
        g = _grad_beta_all(st.model, st.resid, st.alpha, st.pen, st.clusters)
        got = st.step("beta", g, rate_b, config.max_halvings)
        rate_b = min(config.a_beta, 2.0 * got) if got > 0 else config.a_beta
        if it % config.kmeans_every == 0:
            st.refresh_clusters(config.kmeans_restarts, [config.seed, it])
        history.append(st.obj)
        delta = st.obj - prev
        if config.verbose:
            print(f"{it},{st.obj!r},{delta!r}", file=sys.stderr)
        if not math.isfinite(st.obj):
            raise TrainingError(f"objective became non-finite at iteration {it}; try smaller learning rates")
        if abs(delta) < config.tol * max(1.0, abs(prev)):
            converged = True
            break
    report = TrainReport(history, it, converged, st.clusters, penalty_terms(st.model, st.clusters))
    return st.model, report


def cluster_at_time(
    model: EmbeddingModel, t: float, L: int, restarts: int = 10, seed: int = 0
) -> KMeansResult:
    """Euclidean K-means on the instantaneous outgoing embeddings at ``t``."""
    return kmeans_euclidean(model.alpha(t), L, restarts, seed)

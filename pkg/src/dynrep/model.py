"""Embedding model: spline-coefficient outgoing embeddings, static receiving
embeddings, the logistic link model, its penalized likelihood and gradients.

Shapes used throughout: ``gamma`` is ``(M, R, D)``, ``beta`` is ``(M, R)``,
cluster centers ``theta`` are ``(L_out, R, D)`` and ``zeta`` ``(L_in, R)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .network import DynamicNetwork
from .spline import BasisSystem, design_matrix, eval_basis

__all__ = [
    "EmbeddingModel",
    "Penalties",
    "ClusterState",
    "sigmoid",
    "alpha_at",
    "eta",
    "link_probability",
    "probability_matrix",
    "log_likelihood",
    "functional_inner_product",
    "functional_distance_sq",
    "penalty_terms",
    "penalized_objective",
    "grad_gamma",
    "grad_beta",
    "predict_links",
]


@dataclass(frozen=True)
class Penalties:
    """Penalty weights: centering (``*0``), ridge (``*1``) and smoothness (``a2``)."""

    lam_a0: float = 0.1
    lam_b0: float = 0.1
    lam_a1: float = 0.01
    lam_b1: float = 0.01
    lam_a2: float = 0.01

    def __post_init__(self):
        for name, v in self.as_dict().items():
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite non-negative number, got {v}")

    def as_dict(self) -> dict:
        return {
            "lam_a0": self.lam_a0,
            "lam_b0": self.lam_b0,
            "lam_a1": self.lam_a1,
            "lam_b1": self.lam_b1,
            "lam_a2": self.lam_a2,
        }


@dataclass(eq=False)
class EmbeddingModel:
    basis: BasisSystem
    gamma: np.ndarray
    beta: np.ndarray
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        M, R, D = self.gamma.shape
        if D != self.basis.num_basis:
            raise ValueError(f"gamma has {D} coefficients per function, basis has {self.basis.num_basis}")
        if self.beta.shape != (M, R):
            raise ValueError(f"beta must have shape {(M, R)}, got {self.beta.shape}")
        if self.node_labels is None:
            self.node_labels = tuple(f"n{j}" for j in range(M))
        self.node_labels = tuple(str(s) for s in self.node_labels)
        if len(self.node_labels) != M:
            raise ValueError("need one label per node")

    @property
    def M(self) -> int:
        return self.gamma.shape[0]

    @property
    def R(self) -> int:
        return self.gamma.shape[1]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.basis, self.gamma.copy(), self.beta.copy(), self.node_labels)

    def alpha(self, t) -> np.ndarray:
        """All outgoing embeddings at ``t``: ``(M, R)``, or ``(len(t), M, R)``."""
        B = design_matrix(self.basis, t)
        out = alphas_from_design(self.gamma, B)
        return out[0] if np.ndim(t) == 0 else out

    def to_dict(self) -> dict:
        return {
            "basis": self.basis.to_dict(),
            "R": self.R,
            "node_labels": list(self.node_labels),
            "gamma": self.gamma.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingModel":
        basis = BasisSystem.from_dict(d["basis"])
        gamma = np.array(d["gamma"], dtype=np.float64).reshape(len(d["node_labels"]), int(d["R"]), basis.D)
        beta = np.array(d["beta"], dtype=np.float64).reshape(len(d["node_labels"]), int(d["R"]))
        return cls(basis, gamma, beta, tuple(d["node_labels"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EmbeddingModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(eq=False)
class ClusterState:
    """Cluster centers and 0-based assignments for both embedding components."""

    theta: np.ndarray
    zeta: np.ndarray
    assign_out: np.ndarray
    assign_in: np.ndarray
    inertia_out: float = field(default=float("nan"))
    inertia_in: float = field(default=float("nan"))

    @property
    def L_out(self) -> int:
        return self.theta.shape[0]

    @property
    def L_in(self) -> int:
        return self.zeta.shape[0]

    def copy(self) -> "ClusterState":
        return ClusterState(
            self.theta.copy(), self.zeta.copy(), self.assign_out.copy(), self.assign_in.copy(),
            self.inertia_out, self.inertia_in,
        )

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "zeta": self.zeta.tolist(),
            "assign_out": [int(a) for a in self.assign_out],
            "assign_in": [int(a) for a in self.assign_in],
        }


def sigmoid(x):
    """Overflow-safe logistic function."""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))
    return out[()] if out.ndim == 0 else out


def alphas_from_design(gamma: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``alpha[i, j, r] = sum_d B[i, d] * gamma[j, r, d]``."""
    return np.ascontiguousarray(np.einsum("id,jrd->ijr", B, gamma))


def alpha_at(model: EmbeddingModel, j: int, t: float) -> np.ndarray:
    return model.gamma[j] @ eval_basis(model.basis, t)


def eta(model: EmbeddingModel, j: int, k: int, t: float) -> float:
    return float(alpha_at(model, j, t) @ model.beta[k])


def link_probability(model: EmbeddingModel, j: int, k: int, t: float) -> float:
    return float(sigmoid(eta(model, j, k, t)))


def probability_matrix(model: EmbeddingModel, t: float) -> np.ndarray:
    """``p_jk(t)`` for all pairs, zero on the diagonal."""
    p = sigmoid(model.alpha(t) @ model.beta.T)
    np.fill_diagonal(p, 0.0)
    return p


def predict_links(model: EmbeddingModel, t: float, threshold: float = 0.5):
    """Binary link predictions (``p >= threshold``) and the probability matrix."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    p = probability_matrix(model, t)
    pred = (p >= threshold).astype(np.uint8)
    np.fill_diagonal(pred, 0)
    return pred, p


def _loglik(model: EmbeddingModel, net: DynamicNetwork, B: np.ndarray | None = None):
    if B is None:
        B = design_matrix(model.basis, net.times)
    alpha = alphas_from_design(model.gamma, B)
    ll, resid = kernels.loglik_residual(alpha, model.beta, net.snapshots, net.mask)
    return ll, resid, alpha, B


def log_likelihood(model: EmbeddingModel, net: DynamicNetwork) -> float:
    """Bernoulli log-likelihood over the observed off-diagonal entries."""
    return _loglik(model, net)[0]


def _gram_of(space) -> np.ndarray:
    return space.gram if isinstance(space, BasisSystem) else np.asarray(space)


def functional_inner_product(space, u: np.ndarray, v: np.ndarray) -> float:
    """``sum_r u_r^T G v_r`` for coefficient blocks ``(R, D)``.

    ``space`` is a :class:`BasisSystem` or its Gram matrix.
    """
    G = _gram_of(space)
    return float(np.einsum("rd,de,re->", np.atleast_2d(u), G, np.atleast_2d(v)))


def functional_distance_sq(u: np.ndarray, v: np.ndarray, space) -> float:
    diff = np.atleast_2d(np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64))
    return max(functional_inner_product(space, diff, diff), 0.0)


def _quad_sum(coeffs: np.ndarray, G: np.ndarray) -> float:
    return float(np.sum((coeffs @ G) * coeffs))


def penalty_terms(model: EmbeddingModel, clusters: ClusterState | None) -> dict:
    """Unweighted penalty sums, keyed like :class:`Penalties` fields.

    The centering sums are zero when ``clusters`` is None.
    """
    bs = model.basis
    out = {
        "lam_a1": _quad_sum(model.gamma, bs.gram),
        "lam_a2": _quad_sum(model.gamma, bs.curvature_gram),
        "lam_b1": float(np.sum(model.beta**2)),
        "lam_a0": 0.0,
        "lam_b0": 0.0,
    }
    if clusters is not None:
        out["lam_a0"] = _quad_sum(model.gamma - clusters.theta[clusters.assign_out], bs.gram)
        out["lam_b0"] = float(np.sum((model.beta - clusters.zeta[clusters.assign_in]) ** 2))
    return out


def _penalized(ll: float, model, pen: Penalties, clusters) -> float:
    terms = penalty_terms(model, clusters)
    w = pen.as_dict()
    return ll - sum(w[k] * terms[k] for k in ("lam_a0", "lam_b0", "lam_a1", "lam_a2", "lam_b1"))


def penalized_objective(
    model: EmbeddingModel,
    net: DynamicNetwork,
    pen: Penalties,
    clusters: ClusterState | None = None,
) -> float:
    """Log-likelihood minus the five weighted penalty sums.

    Centering terms use the assignments stored in ``clusters`` as given.
    """
    return _penalized(log_likelihood(model, net), model, pen, clusters)


def _grad_gamma_all(model, resid, B, pen, clusters) -> np.ndarray:
    bs = model.basis
    # score[j, r, d] = sum_i B[i, d] sum_k resid[i, j, k] beta[k, r]
    score = np.einsum("id,ijr->jrd", B, resid @ model.beta)
    G = model.gamma @ (2.0 * pen.lam_a1 * bs.gram + 2.0 * pen.lam_a2 * bs.curvature_gram)
    if clusters is not None and pen.lam_a0 > 0.0:
        G = G + 2.0 * pen.lam_a0 * (model.gamma - clusters.theta[clusters.assign_out]) @ bs.gram
    return score - G


def _grad_beta_all(model, resid, alpha, pen, clusters) -> np.ndarray:
    score = np.einsum("ijk,ijr->kr", resid, alpha)
    G = 2.0 * pen.lam_b1 * model.beta
    if clusters is not None and pen.lam_b0 > 0.0:
        G = G + 2.0 * pen.lam_b0 * (model.beta - clusters.zeta[clusters.assign_in])
    return score - G


def grad_gamma(model, net, pen, clusters=None, j: int | None = None) -> np.ndarray:
    """Gradient of :func:`penalized_objective` in ``gamma`` with assignments fixed.

    Returns the ``(R, D)`` block of node ``j``, or all ``(M, R, D)`` if ``j``
    is None.
    """
    _, resid, _, B = _loglik(model, net)
    g = _grad_gamma_all(model, resid, B, pen, clusters)
    return g if j is None else g[j]


def grad_beta(model, net, pen, clusters=None, k: int | None = None) -> np.ndarray:
    """Gradient of :func:`penalized_objective` in ``beta``; ``(R,)`` or ``(M, R)``."""
    _, resid, alpha, _ = _loglik(model, net)
    g = _grad_beta_all(model, resid, alpha, pen, clusters)
    return g if k is None else g[k]

"""Synthetic dynamic networks with planted out/in clusters and a known model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EmbeddingModel, alphas_from_design, sigmoid
from .network import DynamicNetwork, from_snapshots
from .spline import BasisSystem, default_num_basis, design_matrix, make_basis

__all__ = ["GeneratorSpec", "SyntheticNetwork", "generate"]


@dataclass(frozen=True)
class GeneratorSpec:
    M: int = 50
    n: int = 20
    R: int = 6
    L_out: int = 4
    L_in: int = 5
    sigma_alpha: float = 0.25
    sigma_beta: float = 0.25
    center_scale: float = 1.0
    basis: BasisSystem | None = None
    seed: int = 0

    def __post_init__(self):
        if self.M < 2 or self.n < 1 or self.R < 1:
            raise ValueError("need M >= 2, n >= 1 and R >= 1")
        for name in ("L_out", "L_in"):
            L = getattr(self, name)
            if not 1 <= L <= self.M:
                raise ValueError(f"{name}={L} must be between 1 and M={self.M}")
        if min(self.sigma_alpha, self.sigma_beta, self.center_scale) < 0:
            raise ValueError("noise and center scales must be non-negative")

    def resolved_basis(self) -> BasisSystem:
        if self.basis is not None:
            return self.basis
        return make_basis(1.0, default_num_basis(self.n), 3)


@dataclass(eq=False)
class SyntheticNetwork:
    network: DynamicNetwork
    truth: EmbeddingModel
    labels_out: np.ndarray
    labels_in: np.ndarray
    probabilities: np.ndarray  # (n, M, M), diagonal zero


def _balanced_labels(M: int, L: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(M) % L).astype(np.int64)


def generate(spec: GeneratorSpec) -> SyntheticNetwork:
    """Draw a network from the planted-cluster logistic model.

    Centers are i.i.d. ``N(0, center_scale^2)``; nodes are split into
    equal-as-possible groups in random order; each node's coefficients are its
    center plus isotropic normal noise. Links are independent Bernoulli draws
    at ``n`` equally spaced times on ``[0, T]``.
    """
    rng = np.random.default_rng(spec.seed)
    basis = spec.resolved_basis()
    M, R, D = spec.M, spec.R, basis.D
    mu_gamma = rng.normal(0.0, spec.center_scale, size=(spec.L_out, R, D))
    mu_beta = rng.normal(0.0, spec.center_scale, size=(spec.L_in, R))
    lab_out = _balanced_labels(M, spec.L_out, rng)
    lab_in = _balanced_labels(M, spec.L_in, rng)
    gamma = mu_gamma[lab_out] + rng.normal(0.0, 1.0, size=(M, R, D)) * spec.sigma_alpha
    beta = mu_beta[lab_in] + rng.normal(0.0, 1.0, size=(M, R)) * spec.sigma_beta
    labels = tuple(f"n{j}" for j in range(M))
    truth = EmbeddingModel(basis, gamma, beta, labels)

    times = np.linspace(0.0, basis.T, spec.n)
    B = design_matrix(basis, times)
    p = sigmoid(alphas_from_design(gamma, B) @ beta.T)
    diag = np.arange(M)
    p[:, diag, diag] = 0.0
    adj = (rng.random(p.shape) < p).astype(np.uint8)
    net = from_snapshots(adj, times, labels, T=basis.T, rescale=False)
    return SyntheticNetwork(net, truth, lab_out, lab_in, p)

"""Clamped uniform B-spline bases on ``[0, T]`` and their Gram matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BasisSystem",
    "make_basis",
    "eval_basis",
    "eval_basis_second_derivative",
    "design_matrix",
    "gram_matrices",
    "default_num_basis",
]


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """``D`` B-splines of a given degree with clamped, equally spaced knots.

    Immutable. ``gram[d, e]`` is the integral of ``phi_d * phi_e`` over
    ``[0, T]`` and ``curvature_gram[d, e]`` the integral of the product of
    second derivatives.
    """

    degree: int
    num_basis: int
    T: float
    knots: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    curvature_gram: np.ndarray = field(repr=False)

    @property
    def D(self) -> int:
        return self.num_basis

    @property
    def num_spans(self) -> int:
        return self.num_basis - self.degree

    @property
    def spacing(self) -> float:
        return self.T / self.num_spans

    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.num_spans + 1)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "D": self.num_basis, "T": self.T}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSystem":
        return make_basis(float(d["T"]), int(d["D"]), int(d["degree"]))


def default_num_basis(n_times: int, degree: int = 3) -> int:
    """``max(6, ceil(n/4))`` capped at ``n``, never below ``degree + 1``."""
    D = min(max(6, -(-n_times // 4)), n_times)
    return max(D, degree + 1)


def make_basis(T: float = 1.0, D: int = 6, degree: int = 3) -> BasisSystem:
    """Build a clamped uniform B-spline basis on ``[0, T]``.

    The breakpoints ``0, h, 2h, ..., T`` split the domain into ``D - degree``
    spans of width ``h``; the boundary knots are repeated ``degree + 1``
    times.

    Examples
    --------
    >>> bs = make_basis(1.0, 4, 0)
    >>> bs.gram
    array([[0.25, 0.  , 0.  , 0.  ],
           [0.  , 0.25, 0.  , 0.  ],
           [0.  , 0.  , 0.25, 0.  ],
           [0.  , 0.  , 0.  , 0.25]])
    """
    degree = int(degree)
    D = int(D)
    T = float(T)
    if degree < 0:
        raise ValueError(f"degree must be non-negative, got {degree}")
    if D < degree + 1:
        raise ValueError(f"D must be at least degree + 1 = {degree + 1}, got {D}")
    if not (T > 0.0 and np.isfinite(T)):
        raise ValueError(f"T must be a positive finite number, got {T}")
    spans = D - degree
    breaks = np.linspace(0.0, T, spans + 1)
    knots = np.concatenate([np.zeros(degree), breaks, np.full(degree, T)])
    proto = BasisSystem(degree, D, T, knots, np.empty((0, 0)), np.empty((0, 0)))
    gram, gram2 = gram_matrices(proto)
    gram.flags.writeable = False
    gram2.flags.writeable = False
    knots.flags.writeable = False
    return BasisSystem(degree, D, T, knots, gram, gram2)


def _as_points(bs: BasisSystem, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.ndim != 1:
        raise ValueError("t must be a scalar or a 1-d array")
    bad = ~((t >= 0.0) & (t <= bs.T))
    if np.any(bad):
        raise ValueError(f"t={t[bad][0]!r} outside basis domain [0, {bs.T}]")
    return t


def _ratio(num, den):
    # 0/0 := 0 for repeated knots
    safe = np.where(den > 0.0, den, 1.0)
    return np.where(den > 0.0, num / safe, 0.0)


def _table(bs: BasisSystem, t: np.ndarray, deriv: int) -> np.ndarray:
    """Cox-de Boor table of derivative ``deriv`` at points ``t``, shape (m, D)."""
    u = bs.knots
    p = bs.degree
    m = t.shape[0]
    if deriv > p:
        return np.zeros((m, bs.num_basis))
    lo, hi = u[:-1], u[1:]
    N = ((lo[None, :] <= t[:, None]) & (t[:, None] < hi[None, :])).astype(np.float64)
    # left-continuous at t = T
    end = t == bs.T
    if np.any(end):
        last = int(np.flatnonzero(lo < hi)[-1])
        N[end] = 0.0
        N[end, last] = 1.0
    tt = t[:, None]
    for q in range(1, p - deriv + 1):
        i = np.arange(u.size - q - 1)
        left = _ratio(tt - u[i], u[i + q] - u[i])
        right = _ratio(u[i + q + 1] - tt, u[i + q + 1] - u[i + 1])
        N = left * N[:, :-1] + right * N[:, 1:]
    for q in range(p - deriv + 1, p + 1):
        i = np.arange(u.size - q - 1)
        left = _ratio(np.full(i.size, float(q)), u[i + q] - u[i])
        right = _ratio(np.full(i.size, float(q)), u[i + q + 1] - u[i + 1])
        N = left * N[:, :-1] - right * N[:, 1:]
    return N


def design_matrix(bs: BasisSystem, t, deriv: int = 0) -> np.ndarray:
    """Matrix of ``phi_d^(deriv)(t_i)``, shape ``(len(t), D)``."""
    return _table(bs, _as_points(bs, t), deriv)


def eval_basis(bs: BasisSystem, t) -> np.ndarray:
    """Basis values at ``t``: a D-vector for scalar ``t``, else ``(len(t), D)``.

    Knots are right-continuous except at ``t = T``. Raises ``ValueError`` for
    ``t`` outside ``[0, T]``.
    """
    out = design_matrix(bs, t)
    return out[0] if np.ndim(t) == 0 else out


def eval_basis_second_derivative(bs: BasisSystem, t) -> np.ndarray:
    """Second derivatives of the basis at ``t``; all zeros for degree < 2."""
    out = design_matrix(bs, t, deriv=2)
    return out[0] if np.ndim(t) == 0 else out


def gram_matrices(bs: BasisSystem, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrices of the basis and of its second derivatives.

    Integrals are taken span by span with Gauss-Legendre quadrature of
    ``nodes`` points (default ``degree + 1``), which is exact for the
    piecewise polynomial products involved. The results are symmetric by
    construction and zero outside the band ``|d - e| <= degree``.
    """
    nodes = bs.degree + 1 if nodes is None else int(nodes)
    if nodes < bs.degree + 1:
        raise ValueError(f"need at least degree + 1 = {bs.degree + 1} nodes")
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    h = bs.T / (bs.num_basis - bs.degree)
    starts = np.linspace(0.0, bs.T, bs.num_basis - bs.degree + 1)[:-1]
    pts = (starts[:, None] + 0.5 * h * (xi[None, :] + 1.0)).ravel()
    pts = np.clip(pts, 0.0, bs.T)
    w = np.tile(0.5 * h * wi, starts.size)

    def _gram(deriv):
        B = _table(bs, pts, deriv)
        G = B.T @ (w[:, None] * B)
        return np.triu(G) + np.triu(G, 1).T

    return _gram(0), _gram(2)

"""Rank-weighted kernel PCA: rescaling, fitting, kernel-width tuning and the
forward map into the reduced space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh, eigvalsh

from . import localopt
from .kernels import KernelSpec, cross, gram, rbf

GAMMA_BOUNDS = (1e-4, 2.0)
N_GAMMA_SEEDS = 16
DEFAULT_ETA = 0.9
EIG_CLAMP = 1e-12


class DegenerateDataError(ValueError):
    """Raised when the centred Gram matrix has no positive eigenvalue."""


@dataclass(frozen=True)
class RescaledData:
    points: np.ndarray
    center: np.ndarray
    weights: np.ndarray

    @property
    def mean_weight(self) -> float:
        return float(np.mean(self.weights))

    def transform(self, X) -> np.ndarray:
        """Map new points the way unseen data is mapped: centre, then scale
        by the mean training weight."""
        X = np.asarray(X, dtype=float)
        return self.mean_weight * (X - self.center)


def rank_weights(Y) -> np.ndarray:
    """Normalised weights proportional to ``ln n - ln R_i``.

    Ranks are 1-based on increasing ``Y``; ties keep evaluation order.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    if n < 2:
        raise ValueError("rank weights need at least two points")
    if not np.all(np.isfinite(Y)):
        raise ValueError("objective values must be finite")
    ranks = np.empty(n)
    ranks[np.argsort(Y, kind="stable")] = np.arange(1, n + 1)
    w = np.log(n) - np.log(ranks)
    return w / w.sum()


def rescale(X, Y) -> RescaledData:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    weights = rank_weights(Y)
    if X.shape[0] != weights.size:
        raise ValueError("X and Y have different lengths")
    center = X.mean(axis=0)
    return RescaledData(points=weights[:, None] * (X - center), center=center, weights=weights)


def select_dimension(eigenvalues, eta: float, max_dim: Optional[int] = None) -> int:
    """Smallest ``r`` whose leading eigenvalues carry a fraction ``eta`` of the total."""
    lam = np.asarray(eigenvalues, dtype=float)
    total = lam.sum()
    cum = np.cumsum(lam)
    r = int(np.argmax(cum >= eta * total - 1e-12 * total)) + 1
    if max_dim is not None:
        r = min(r, max(int(max_dim), 1))
    return r


@dataclass(frozen=True)
class KpcaModel:
    rescaled: RescaledData
    gamma: float
    kernel: KernelSpec
    coeffs: np.ndarray  # one row per nonzero eigenvalue
    eigenvalues: np.ndarray
    r: int
    gram_column_means: np.ndarray
    gram_total_mean: float
    eta: float

    @property
    def eig_coeffs(self) -> np.ndarray:
        return self.coeffs[: self.r]

    @property
    def train_points(self) -> np.ndarray:
        return self.rescaled.points

    @property
    def n(self) -> int:
        return self.train_points.shape[0]

    @property
    def dim(self) -> int:
        return self.train_points.shape[1]

    @property
    def explained_ratio(self) -> float:
        lam = self.eigenvalues
        return float(lam[: self.r].sum() / lam.sum())

    def centered_kernel(self, Xr) -> np.ndarray:
        """Rows ``g(x)`` of centred kernel products against the training set."""
        K = cross(self.kernel, Xr, self.train_points)
        return K - K.mean(axis=1, keepdims=True) - self.gram_column_means + self.gram_total_mean

    def forward(self, xr) -> np.ndarray:
        """Project already-rescaled point(s) onto the leading eigenfunctions."""
        xr = np.asarray(xr, dtype=float)
        if xr.shape[-1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {xr.shape[-1]}")
        Z = self.centered_kernel(np.atleast_2d(xr)) @ self.eig_coeffs.T
        return Z[0] if xr.ndim == 1 else Z

    def forward_jacobian(self, xr) -> np.ndarray:
        """Jacobian (r x d) of :meth:`forward` at a single rescaled point."""
        xr = np.asarray(xr, dtype=float)
        T = self.train_points
        if self.kernel.family == "rbf":
            k = cross(self.kernel, xr[None, :], T)[0]
            D = -2.0 * self.kernel.gamma * (xr[None, :] - T) * k[:, None]
        elif self.kernel.family == "linear":
            D = T
        else:
            raise NotImplementedError(self.kernel.family)
        return self.eig_coeffs @ (D - D.mean(axis=0))

    def map(self, X) -> np.ndarray:
        """Forward map of raw (unscaled) point(s) from the search domain."""
        return self.forward(self.rescaled.transform(X))

    def scores(self) -> np.ndarray:
        """Training-set coordinates in the reduced space."""
        return self.forward(self.train_points)


def centered_gram(kernel: KernelSpec, points: np.ndarray):
    """Double-centred Gram matrix plus the column means and grand mean used
    to centre out-of-sample kernel rows."""
    G = gram(kernel, points)
    col = G.mean(axis=0)
    total = float(col.mean())
    Gc = G - col[None, :] - col[:, None] + total
    return 0.5 * (Gc + Gc.T), col, total


def _clamp(mu: np.ndarray) -> np.ndarray:
    mu = np.where(mu < EIG_CLAMP * mu[0], 0.0, mu)
    return np.maximum(mu, 0.0)


def fit_kpca(data: RescaledData, gamma: float, eta: float = DEFAULT_ETA,
             kernel: Optional[KernelSpec] = None) -> KpcaModel:
    """Kernel PCA of the rescaled points.

    The Gram eigenvalues ``mu`` are converted to covariance eigenvalues
    ``mu / n`` and the coefficient vectors are scaled by ``1/sqrt(mu)`` so that
    every eigenfunction has unit norm in feature space.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    kernel = rbf(gamma) if kernel is None else kernel
    points = data.points
    n, d = points.shape
    Gc, col, total = centered_gram(kernel, points)
    mu, U = eigh(Gc)
    mu, U = mu[::-1], U[:, ::-1]
    if not mu[0] > EIG_CLAMP * max(1.0, float(np.max(np.abs(np.diag(gram(kernel, points)))))):
        raise DegenerateDataError("all rescaled points coincide in feature space")
    mu = _clamp(mu)
    m = int(np.count_nonzero(mu))
    coeffs = (U[:, :m] / np.sqrt(mu[:m])).T
    lam = mu / n
    r = min(select_dimension(lam, eta, max_dim=d - 1 if d > 1 else 1), m)
    return KpcaModel(
        rescaled=data,
        gamma=float(gamma),
        kernel=kernel,
        coeffs=coeffs,
        eigenvalues=lam,
        r=r,
        gram_column_means=col,
        gram_total_mean=total,
        eta=float(eta),
    )


def gamma_objective(data: RescaledData, gamma: float, eta: float = DEFAULT_ETA) -> float:
    """``r - explained fraction`` for an RBF kernel of width ``gamma``."""
    Gc, _, _ = centered_gram(rbf(gamma), data.points)
    mu = _clamp(eigvalsh(Gc)[::-1])
    if not mu[0] > 0:
        raise DegenerateDataError("all rescaled points coincide in feature space")
    d = data.points.shape[1]
    r = select_dimension(mu, eta, max_dim=d - 1 if d > 1 else 1)
    return r - float(mu[:r].sum() / mu.sum())


def tune_gamma(data: RescaledData, eta: float = DEFAULT_ETA, budget: Optional[int] = None) -> float:
    """Kernel width minimising :func:`gamma_objective` on ``GAMMA_BOUNDS``.

    Sixteen log-spaced seeds are each refined by the local optimiser; among
    equal objective values the smallest width wins.
    """
    lo, hi = GAMMA_BOUNDS
    d = data.points.shape[1]
    budget = 200 * d if budget is None else int(budget)
    cache: dict[float, float] = {}

    def objective(g):
        key = float(g[0])
        if key not in cache:
            cache[key] = gamma_objective(data, key, eta)
        return cache[key]

    problem = localopt.BoundedProblem(objective=objective, bounds=[[lo, hi]], max_iters=budget)
    candidates = []
    for seed in np.geomspace(lo, hi, N_GAMMA_SEEDS):
        res = localopt.minimize(problem, [seed])
        candidates.append((res.value, float(res.x[0])))
        candidates.append((objective([seed]), float(seed)))
    best = min(v for v, _ in candidates)
    return min(g for v, g in candidates if v <= best + 1e-12)


@dataclass(frozen=True)
class ReducedDomain:
    r: int
    radius: float
    bounds: np.ndarray


def farthest_vertex(bounds, center) -> np.ndarray:
    """Vertex of the box farthest from ``center``."""
    bounds = np.asarray(bounds, dtype=float)
    return np.where(center < bounds.mean(axis=1), bounds[:, 1], bounds[:, 0])


def reduced_domain(model: KpcaModel, bounds) -> ReducedDomain:
    """Hyperbox ``[-radius, radius]^r`` covering the feature-space ball
    around the image of the origin.

    The radius is the feature distance between the origin and the rescaled
    box vertex farthest from the data centre; every point of the box mapped
    with :meth:`RescaledData.transform` lies no farther out.
    """
    data = model.rescaled
    vertex = data.transform(farthest_vertex(bounds, data.center))
    k = float(cross(model.kernel, vertex[None, :], np.zeros((1, model.dim)))[0, 0])
    radius = float(np.sqrt(max(2.0 - 2.0 * k, 0.0)))
    return ReducedDomain(r=model.r, radius=radius, bounds=np.tile([-radius, radius], (model.r, 1)))

"""RBF, Matern 5/2 and linear kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    family: str = "rbf"
    gamma: float = 1.0
    length_scales: Optional[np.ndarray] = None
    signal_variance: float = 1.0

    def __post_init__(self):
        if self.family not in ("rbf", "matern52", "linear"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "rbf" and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.family == "matern52":
            if self.length_scales is None or np.any(np.asarray(self.length_scales) <= 0):
                raise ValueError("matern52 needs strictly positive length_scales")
            if not self.signal_variance > 0:
                raise ValueError("signal_variance must be positive")


def rbf(gamma: float) -> KernelSpec:
    return KernelSpec("rbf", gamma=float(gamma))


def matern52(length_scales, signal_variance: float = 1.0) -> KernelSpec:
    return KernelSpec(
        "matern52",
        length_scales=np.atleast_1d(np.asarray(length_scales, dtype=float)),
        signal_variance=float(signal_variance),
    )


LINEAR = KernelSpec("linear")


def sq_dists(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clamped at zero."""
    XX = np.sum(X * X, axis=1)[:, None]
    YY = np.sum(Y * Y, axis=1)[None, :]
    return np.maximum(XX + YY - 2.0 * X @ Y.T, 0.0)


def matern52_from_dist(rho: np.ndarray, signal_variance: float = 1.0) -> np.ndarray:
    s = SQRT5 * rho
    return signal_variance * (1.0 + s + s * s / 3.0) * np.exp(-s)


def cross(k: KernelSpec, X, Y) -> np.ndarray:
    """Kernel matrix between the rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if k.family == "rbf":
        return np.exp(-k.gamma * sq_dists(X, Y))
    if k.family == "linear":
        return X @ Y.T
    ls = np.broadcast_to(k.length_scales, (X.shape[1],))
    rho = np.sqrt(sq_dists(X / ls, Y / ls))
    return matern52_from_dist(rho, k.signal_variance)


def kernel_eval(k: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if k.family == "rbf":
        return float(np.exp(-k.gamma * np.sum((x - y) ** 2)))
    if k.family == "linear":
        return float(x @ y)
    rho = np.sqrt(np.sum(((x - y) / k.length_scales) ** 2))
    return float(matern52_from_dist(rho, k.signal_variance))


def gram(k: KernelSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    G = cross(k, X, X)
    return 0.5 * (G + G.T)


def feature_distance(k: KernelSpec, x, y) -> float:
    """Distance between the feature-space images of ``x`` and ``y``."""
    sq = kernel_eval(k, x, x) - 2.0 * kernel_eval(k, x, y) + kernel_eval(k, y, y)
    if sq < -1e-12:
        raise ArithmeticError(f"negative squared feature distance {sq:g}; kernel is not positive definite")
    return float(np.sqrt(max(sq, 0.0)))

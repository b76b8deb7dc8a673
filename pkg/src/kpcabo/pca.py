"""Linear PCA on rank-rescaled data, used by the PCA-BO baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .backmap import PreimageResult, clip
from .kpca import DEFAULT_ETA, DegenerateDataError, RescaledData, select_dimension


@dataclass(frozen=True)
class PcaModel:
    rescaled: RescaledData
    mean: np.ndarray  # mean of the rescaled points
    components: np.ndarray  # d x r, orthonormal columns
    eigenvalues: np.ndarray
    r: int

    def forward(self, xr) -> np.ndarray:
        return (np.asarray(xr, dtype=float) - self.mean) @ self.components

    def map(self, X) -> np.ndarray:
        return self.forward(self.rescaled.transform(X))

    def scores(self) -> np.ndarray:
        return self.forward(self.rescaled.points)

    def reconstruct(self, z) -> np.ndarray:
        """Inverse of :meth:`map` on the principal subspace (no clipping)."""
        xr = self.mean + self.components @ np.asarray(z, dtype=float)
        return self.rescaled.center + xr / self.rescaled.mean_weight

    def backward(self, z, bounds) -> PreimageResult:
        raw = self.reconstruct(z)
        x = clip(raw, bounds)
        err = np.asarray(z, dtype=float) - self.map(raw)
        return PreimageResult(
            x=x, weights=np.empty(0), residual=float(err @ err), clipped=bool(np.any(x != raw)), raw=raw
        )

    def domain_bounds(self, bounds) -> np.ndarray:
        """Exact bounding box of the image of the search box."""
        bounds = np.asarray(bounds, dtype=float)
        mid, half = bounds.mean(axis=1), 0.5 * (bounds[:, 1] - bounds[:, 0])
        c = self.map(mid)
        spread = self.rescaled.mean_weight * np.abs(self.components).T @ half
        return np.column_stack([c - spread, c + spread])


def fit_pca(data: RescaledData, eta: float = DEFAULT_ETA) -> PcaModel:
    pts = data.points
    n, d = pts.shape
    mean = pts.mean(axis=0)
    cov = (pts - mean).T @ (pts - mean) / n
    lam, U = eigh(0.5 * (cov + cov.T))
    lam, U = np.maximum(lam[::-1], 0.0), U[:, ::-1]
    if not lam[0] > 0:
        raise DegenerateDataError("rescaled points have zero variance")
    r = select_dimension(lam, eta, max_dim=d - 1 if d > 1 else 1)
    return PcaModel(rescaled=data, mean=mean, components=U[:, :r], eigenvalues=lam, r=r)

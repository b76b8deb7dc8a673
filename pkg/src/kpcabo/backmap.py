"""Pre-images of reduced-space points as conical combinations of archive points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import localopt
from .kpca import KpcaModel

W_MAX = 10.0
# exp() overflows just above 709
_MAX_EXPONENT = 700.0


@dataclass
class PreimageResult:
    x: np.ndarray
    weights: np.ndarray
    residual: float
    clipped: bool
    raw: np.ndarray  # the combination before clipping

    @property
    def zero_weights(self) -> bool:
        return not np.any(self.weights > 0)


def out_of_box_penalty(x, bounds) -> float:
    """``exp`` of the total bound violation; equals 1 inside the box."""
    bounds = np.asarray(bounds, dtype=float)
    viol = np.maximum(0.0, bounds[:, 0] - x) + np.maximum(0.0, x - bounds[:, 1])
    return float(np.exp(min(np.sum(viol), _MAX_EXPONENT)))


def clip(x, bounds) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    return np.clip(x, bounds[:, 0], bounds[:, 1])


def preimage_objective(model: KpcaModel, z, P, bounds):
    """Return ``w -> (loss, grad)`` for the conical-weight fit against ``z``."""
    z = np.asarray(z, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    scale = model.rescaled.mean_weight
    center = model.rescaled.center

    def value_and_grad(w):
        x = w @ P
        xr = scale * (x - center)
        err = z - model.forward(xr)
        q = out_of_box_penalty(x, bounds)
        dq_dx = q * ((x > hi).astype(float) - (x < lo).astype(float))
        J = model.forward_jacobian(xr)
        grad_x = -2.0 * scale * (J.T @ err) + dq_dx
        return float(err @ err) + q, P @ grad_x

    return value_and_grad


def backward(model: KpcaModel, z, archive, bounds, rng: np.random.Generator) -> PreimageResult:
    """Map ``z`` back to the search box.

    ``d`` archive points are drawn without replacement and non-negative
    weights in ``[0, W_MAX]`` are fitted from the zero vector so that the
    forward image of the combination lands on ``z``. The combination is then
    clipped to the box.
    """
    archive = np.atleast_2d(np.asarray(archive, dtype=float))
    n, d = archive.shape
    if n < d:
        raise ValueError(f"archive has {n} points, at least {d} are needed")
    z = np.asarray(z, dtype=float)
    if z.shape != (model.r,):
        raise ValueError(f"expected a reduced point of shape ({model.r},), got {z.shape}")
    P = archive[rng.choice(n, size=d, replace=False)]
    vg = preimage_objective(model, z, P, bounds)
    problem = localopt.BoundedProblem(
        objective=lambda w: vg(w)[0],
        value_and_grad=vg,
        bounds=np.tile([0.0, W_MAX], (d, 1)),
        max_iters=200 * d,
    )
    res = localopt.minimize(problem, np.zeros(d))
    raw = res.x @ P
    x = clip(raw, bounds)
    err = z - model.map(raw)
    return PreimageResult(
        x=x,
        weights=res.x,
        residual=float(err @ err),
        clipped=bool(np.any(x != raw)),
        raw=raw,
    )

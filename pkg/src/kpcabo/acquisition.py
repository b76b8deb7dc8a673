"""Expected improvement and its multi-restart maximisation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from . import localopt
from .backmap import PreimageResult, clip
from .gpr import GprModel

SD_FLOOR = 1e-12
MAX_ITERS = 500
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _pdf(u):
    return _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def ei_from_moments(mean, sd, y_best):
    """Vectorised EI for minimisation given posterior mean and standard deviation."""
    mean, sd = np.broadcast_arrays(np.asarray(mean, dtype=float), np.asarray(sd, dtype=float))
    out = np.zeros(mean.shape)
    ok = sd >= SD_FLOOR
    u = (y_best - mean[ok]) / sd[ok]
    out[ok] = sd[ok] * (u * ndtr(u) + _pdf(u))
    # the closed form can dip a few ulps below zero for very negative u
    return np.maximum(out, 0.0) if out.ndim else float(max(out, 0.0))


def expected_improvement(m: GprModel, z, y_best: float) -> float:
    mean, var = m.predict(z)
    return float(ei_from_moments(mean, np.sqrt(var), y_best))


def ei_and_grad(m: GprModel, z, y_best: float):
    mean, var, dmean, dvar = m.predict_with_grad(z)
    sd = np.sqrt(var)
    if sd < SD_FLOOR:
        return 0.0, np.zeros_like(dmean)
    u = (y_best - mean) / sd
    cdf, pdf = ndtr(u), _pdf(u)
    ei = max(sd * (u * cdf + pdf), 0.0)
    dsd = dvar / (2.0 * sd)
    return float(ei), -cdf * dmean + pdf * dsd


@dataclass
class Proposal:
    z: np.ndarray
    x: np.ndarray
    ei: float
    preimage: PreimageResult
    restart_index: int
    feasible: bool


def identity_preimage(bounds) -> Callable:
    """Pre-image map for optimisation directly in the search box."""

    def back(z):
        z = np.asarray(z, dtype=float)
        x = clip(z, bounds)
        return PreimageResult(x=x, weights=np.empty(0), residual=0.0, clipped=bool(np.any(x != z)), raw=z)

    return back


def maximize_ei(m: GprModel, search_bounds, y_best: float, x0) -> localopt.OptResult:
    def neg(z):
        ei, g = ei_and_grad(m, z, y_best)
        return -ei, -g

    problem = localopt.BoundedProblem(
        objective=lambda z: neg(z)[0], value_and_grad=neg, bounds=search_bounds, max_iters=MAX_ITERS
    )
    return localopt.minimize(problem, x0)


def propose(
    m: GprModel,
    search_bounds,
    preimage: Callable[[np.ndarray], PreimageResult],
    restarts: int = 10,
    rng: Optional[np.random.Generator] = None,
    y_best: Optional[float] = None,
) -> Proposal:
    """Maximise EI from ``restarts`` uniform starts and map each optimum back.

    A restart is feasible when its pre-image needed no clipping. The feasible
    candidate with the largest EI wins; if none is feasible the largest-EI
    candidate is returned with ``feasible=False``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    search_bounds = np.asarray(search_bounds, dtype=float)
    if y_best is None:
        y_best = m.y_mean + m.y_std * float(np.min(m.y))
    starts = rng.uniform(search_bounds[:, 0], search_bounds[:, 1], size=(restarts, len(search_bounds)))
    candidates = []
    for i, z0 in enumerate(starts):
        res = maximize_ei(m, search_bounds, y_best, z0)
        pre = preimage(res.x)
        candidates.append(Proposal(z=res.x, x=pre.x, ei=-res.value, preimage=pre, restart_index=i,
                                   feasible=not pre.clipped))
    return select(candidates)


def select(candidates) -> Proposal:
    """Feasible first, then larger EI, then earlier restart."""
    return min(candidates, key=lambda p: (not p.feasible, -p.ei, p.restart_index))

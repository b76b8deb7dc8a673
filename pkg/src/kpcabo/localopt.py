"""Box-constrained quasi-Newton minimisation with multi-start support."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

MEMORY = 10
PGTOL = 1e-8
FTOL = 1e-10


@dataclass
class BoundedProblem:
    objective: Callable[[np.ndarray], float]
    bounds: np.ndarray
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    max_iters: int = 1000
    # objective returning (value, gradient) in one call, preferred over the pair above
    value_and_grad: Optional[Callable[[np.ndarray], tuple]] = None

    def __post_init__(self):
        self.bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if not np.all(np.isfinite(self.bounds)):
            raise ValueError("bounds must be finite")
        if np.any(self.bounds[:, 0] > self.bounds[:, 1]):
            raise ValueError("lower bound above upper bound")


@dataclass
class OptResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool


def fd_gradient(fun, x, bounds, f0=None):
    """Central differences with step ``1e-6 * (1 + |x_i|)``.

    Falls back to a one-sided difference when a central step would leave the
    box, so the objective is never probed outside ``bounds``.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    lo, hi = bounds[:, 0], bounds[:, 1]
    for i in range(x.size):
        h = 1e-6 * (1.0 + abs(x[i]))
        up, down = x.copy(), x.copy()
        if x[i] + h > hi[i]:
            if f0 is None:
                f0 = fun(x)
            down[i] -= h
            grad[i] = (f0 - fun(down)) / h
        elif x[i] - h < lo[i]:
            if f0 is None:
                f0 = fun(x)
            up[i] += h
            grad[i] = (fun(up) - f0) / h
        else:
            up[i] += h
            down[i] -= h
            grad[i] = (fun(up) - fun(down)) / (2.0 * h)
    return grad


def _value_and_grad(p: BoundedProblem):
    if p.value_and_grad is not None:
        return p.value_and_grad
    if p.gradient is not None:
        return lambda x: (p.objective(x), p.gradient(x))

    def vg(x):
        f = p.objective(x)
        return f, fd_gradient(p.objective, x, p.bounds, f0=f)

    return vg


def minimize(p: BoundedProblem, x0) -> OptResult:
    """L-BFGS-B from ``x0``; never returns a point worse than ``x0``."""
    x0 = np.clip(np.asarray(x0, dtype=float), p.bounds[:, 0], p.bounds[:, 1])
    vg = _value_and_grad(p)
    f0, _ = vg(x0)
    f0 = float(f0)
    if not np.isfinite(f0):
        raise FloatingPointError("objective is not finite at the starting point")

    def wrapped(x):
        f, g = vg(x)
        return float(f), np.asarray(g, dtype=float)

    res = _scipy_minimize(
        wrapped,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=p.bounds,
        options={
            "maxcor": MEMORY,
            "gtol": PGTOL,
            "ftol": FTOL,
            "maxiter": int(p.max_iters),
            "maxfun": 20 * int(p.max_iters) + 100,
        },
    )
    x = np.clip(res.x, p.bounds[:, 0], p.bounds[:, 1])
    value = float(res.fun)
    if not np.isfinite(value) or value > f0:
        return OptResult(x=x0, value=f0, iterations=int(res.nit), converged=False)
    return OptResult(x=x, value=value, iterations=int(res.nit), converged=bool(res.success))


def minimize_multistart(p: BoundedProblem, starts: Sequence) -> OptResult:
    """Best of independent :func:`minimize` runs; ties go to the earliest start."""
    starts = list(starts)
    if not starts:
        raise ValueError("at least one start is required")
    best, last_error = None, None
    for x0 in starts:
        try:
            res = minimize(p, x0)
        except (FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
            last_error = exc
            continue
        if best is None or res.value < best.value:
            best = res
    if best is None:
        raise last_error
    return best

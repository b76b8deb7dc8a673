"""Zero-mean Gaussian process regression with an anisotropic Matern 5/2 kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from . import localopt
from .kernels import SQRT5, KernelSpec, matern52, matern52_from_dist, sq_dists

LENGTH_SCALE_BOUNDS = (1e-2, 1e2)
SIGNAL_VARIANCE_BOUNDS = (1e-2, 1e2)
NUGGET_BOUNDS = (1e-8, 1e-2)
N_STARTS = 5
MAX_ITERS = 200


class IllConditionedError(np.linalg.LinAlgError):
    pass


def _log_bounds(dim):
    lo = [np.log(LENGTH_SCALE_BOUNDS[0])] * dim + [np.log(SIGNAL_VARIANCE_BOUNDS[0]), np.log(NUGGET_BOUNDS[0])]
    hi = [np.log(LENGTH_SCALE_BOUNDS[1])] * dim + [np.log(SIGNAL_VARIANCE_BOUNDS[1]), np.log(NUGGET_BOUNDS[1])]
    return np.column_stack([lo, hi])


def _unpack(theta):
    theta = np.asarray(theta, dtype=float)
    return np.exp(theta[:-2]), float(np.exp(theta[-2])), float(np.exp(theta[-1]))


def log_marginal_likelihood(theta, Z, y, with_grad=True):
    """Log marginal likelihood and its gradient w.r.t. log-hyperparameters.

    ``theta`` holds ``log`` length-scales, ``log`` signal variance and
    ``log`` nugget, in that order.
    """
    ls, sf2, nugget = _unpack(theta)
    Zs = Z / ls
    rho = np.sqrt(sq_dists(Zs, Zs))
    n = Z.shape[0]
    e = np.exp(-SQRT5 * rho)
    Kf = sf2 * (1.0 + SQRT5 * rho + 5.0 * rho**2 / 3.0) * e
    K = Kf + nugget * np.eye(n)
    L = cholesky(K, lower=True)
    alpha = cho_solve((L, True), y)
    lml = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    if not with_grad:
        return lml
    W = np.outer(alpha, alpha) - cho_solve((L, True), np.eye(n))
    M = W * (sf2 * (5.0 / 3.0) * (1.0 + SQRT5 * rho) * e)
    # sum_ij M_ij (z_ik - z_jk)^2 for every column k at once
    quad = 2.0 * (np.sum(M, axis=1) @ Zs**2) - 2.0 * np.sum(Zs * (M @ Zs), axis=0)
    grad = np.empty(len(theta))
    grad[:-2] = 0.5 * quad
    grad[-2] = 0.5 * np.sum(W * Kf)
    grad[-1] = 0.5 * nugget * np.trace(W)
    return lml, grad


@dataclass
class GprModel:
    Z: np.ndarray
    y: np.ndarray  # standardised targets
    y_mean: float
    y_std: float
    kernel: KernelSpec
    nugget: float
    chol: np.ndarray
    alpha: np.ndarray
    log_likelihood: float
    # affine input map z -> (z - input_shift) / input_scale applied before the kernel
    input_shift: np.ndarray = None
    input_scale: np.ndarray = None

    def __post_init__(self):
        if self.input_shift is None:
            self.input_shift = np.zeros(self.Z.shape[1])
        if self.input_scale is None:
            self.input_scale = np.ones(self.Z.shape[1])

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def normalize(self, z):
        return (np.asarray(z, dtype=float) - self.input_shift) / self.input_scale

    @property
    def theta(self) -> np.ndarray:
        return np.log(np.r_[self.kernel.length_scales, self.kernel.signal_variance, self.nugget])

    def _cross(self, Zq):
        ls = self.kernel.length_scales
        rho = np.sqrt(sq_dists(Zq / ls, self.Z / ls))
        return rho, matern52_from_dist(rho, self.kernel.signal_variance)

    def predict(self, z):
        """Posterior mean and variance on the original output scale."""
        z = np.asarray(z, dtype=float)
        Zq = np.atleast_2d(z)
        if Zq.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {Zq.shape[1]}")
        _, k = self._cross(self.normalize(Zq))
        mean = k @ self.alpha
        v = solve_triangular(self.chol, k.T, lower=True)
        var = self.kernel.signal_variance - np.sum(v * v, axis=0)
        assert np.all(var > -1e-8 * self.kernel.signal_variance - 1e-8), "negative posterior variance"
        var = np.maximum(var, 0.0)
        mean = self.y_mean + self.y_std * mean
        var = self.y_std**2 * var
        if z.ndim == 1:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict_with_grad(self, z):
        """Mean, variance and their gradients at a single point (original scale)."""
        z = self.normalize(z)
        ls = self.kernel.length_scales
        rho, k = self._cross(z[None, :])
        rho, k = rho[0], k[0]
        # dk/dz = -sf2 * 5/3 * (1 + sqrt5 rho) exp(-sqrt5 rho) * (z - z_i) / ls^2
        c = -self.kernel.signal_variance * (5.0 / 3.0) * (1.0 + SQRT5 * rho) * np.exp(-SQRT5 * rho)
        dk = c[:, None] * (z[None, :] - self.Z) / ls**2
        kinv_k = cho_solve((self.chol, True), k)
        mean = k @ self.alpha
        var = self.kernel.signal_variance - k @ kinv_k
        dmean = dk.T @ self.alpha
        dvar = -2.0 * dk.T @ kinv_k
        if var < 0.0:
            var, dvar = 0.0, np.zeros_like(dvar)
        s = self.y_std
        dmean, dvar = dmean / self.input_scale, dvar / self.input_scale
        return self.y_mean + s * mean, s * s * var, s * dmean, s * s * dvar


def _dedupe(Z, rng):
    Z = np.array(Z, dtype=float, copy=True)
    _, first, counts = np.unique(Z, axis=0, return_index=True, return_counts=True)
    if np.all(counts == 1):
        return Z
    seen = np.zeros(len(Z), dtype=bool)
    seen[first] = True
    dup = ~seen
    Z[dup] += 1e-8 * rng.standard_normal((int(dup.sum()), Z.shape[1]))
    return Z


def _standardize(y):
    mu = float(np.mean(y))
    sd = float(np.std(y))
    if not sd > 1e-12:
        sd = 1.0
    return (y - mu) / sd, mu, sd


def _input_map(dim, input_bounds):
    if input_bounds is None:
        return np.zeros(dim), np.ones(dim)
    b = np.asarray(input_bounds, dtype=float)
    width = b[:, 1] - b[:, 0]
    return b[:, 0].copy(), np.where(width > 0, width, 1.0)


def _build(Z, ys, mu, sd, theta, shift=None, scale=None) -> GprModel:
    ls, sf2, nugget = _unpack(theta)
    kernel = matern52(ls, sf2)
    rho = np.sqrt(sq_dists(Z / ls, Z / ls))
    Kf = matern52_from_dist(rho, sf2)
    n = len(Z)
    while True:
        try:
            L = cholesky(Kf + nugget * np.eye(n), lower=True)
            break
        except np.linalg.LinAlgError:
            if nugget >= NUGGET_BOUNDS[1]:
                raise IllConditionedError("covariance matrix not positive definite even with the largest nugget")
            nugget = min(10.0 * nugget, NUGGET_BOUNDS[1])
    alpha = cho_solve((L, True), ys)
    lml = -0.5 * ys @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    return GprModel(Z=Z, y=ys, y_mean=mu, y_std=sd, kernel=kernel, nugget=nugget, chol=L, alpha=alpha,
                    log_likelihood=float(lml), input_shift=shift, input_scale=scale)


def fit_fixed(Z, y, length_scales, signal_variance=1.0, nugget=1e-8, standardize=True) -> GprModel:
    """Condition a GP with given hyperparameters (no likelihood search)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float)
    ys, mu, sd = _standardize(y) if standardize else (y, 0.0, 1.0)
    ls = np.broadcast_to(np.asarray(length_scales, dtype=float), (Z.shape[1],))
    return _build(Z, ys, mu, sd, np.log(np.r_[ls, signal_variance, nugget]))


def fit(Z, y, rng: np.random.Generator, input_bounds=None) -> GprModel:
    """Maximum-likelihood GP fit with five starts (one heuristic, four random).

    With ``input_bounds`` the inputs are mapped affinely onto the unit cube
    before fitting, so the length-scale bounds apply in those units.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    y = np.asarray(y, dtype=float)
    n, dim = Z.shape
    if n < 2:
        raise ValueError("GP fit needs at least two points")
    if len(y) != n:
        raise ValueError("Z and y have different lengths")
    shift, scale = _input_map(dim, input_bounds)
    Z = _dedupe((Z - shift) / scale, rng)
    ys, mu, sd = _standardize(y)
    bounds = _log_bounds(dim)

    def negative(theta):
        try:
            lml, grad = log_marginal_likelihood(theta, Z, ys)
        except np.linalg.LinAlgError:
            return 1e25, np.zeros_like(theta)
        return -lml, -grad

    problem = localopt.BoundedProblem(
        objective=lambda t: negative(t)[0], value_and_grad=negative, bounds=bounds, max_iters=MAX_ITERS
    )
    span = np.ptp(Z, axis=0)
    init_ls = np.clip(np.where(span > 0, span / 4.0, 1.0), *LENGTH_SCALE_BOUNDS)
    starts = [np.log(np.r_[init_ls, 1.0, 1e-6])]
    starts += list(rng.uniform(bounds[:, 0], bounds[:, 1], size=(N_STARTS - 1, len(bounds))))
    try:
        res = localopt.minimize_multistart(problem, starts)
        theta = res.x
    except (FloatingPointError, np.linalg.LinAlgError):
        theta = starts[0]
    return _build(Z, ys, mu, sd, theta, shift, scale)

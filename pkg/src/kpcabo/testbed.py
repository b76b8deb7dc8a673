"""Shifted and rotated multimodal benchmark functions.

Every function is built as ``f(x) = g(R (x - x_opt)) + f_opt`` where ``g`` is a
base landscape with ``g(0) = 0`` and ``g >= 0`` everywhere, ``R`` is a random
orthogonal matrix and ``x_opt`` lies in the central 80% of ``[-5, 5]^d``.
The instance transform is a pure function of ``(id, dim, instance_seed)``.
"""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

LOWER, UPPER = -5.0, 5.0

# argmax of y*sin(sqrt|y|) on [-500, 500]
_SCHWEFEL_YSTAR = 420.968746359982025
_SCHWEFEL_HSTAR = _SCHWEFEL_YSTAR * np.sin(np.sqrt(_SCHWEFEL_YSTAR))


def _sphere(z, aux):
    return np.sum(z**2, axis=-1)


def _ellipsoid(z, aux):
    d = z.shape[-1]
    scales = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return np.sum(scales * z**2, axis=-1)


def _rastrigin(z, aux):
    d = z.shape[-1]
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=-1)) + np.sum(z**2, axis=-1)


_WEIER_K = np.arange(12)
_WEIER_A = 0.5**_WEIER_K
_WEIER_B = 3.0**_WEIER_K
_WEIER_F0 = np.sum(_WEIER_A * np.cos(np.pi * _WEIER_B))


def _weierstrass(z, aux):
    d = z.shape[-1]
    terms = _WEIER_A * np.cos(2.0 * np.pi * _WEIER_B * (z[..., None] + 0.5))
    inner = np.sum(terms, axis=(-1, -2)) / d - _WEIER_F0
    # round-off can push the inner sum a hair below its minimum
    return 10.0 * np.maximum(inner, 0.0) ** 3


def _schaffers(z, aux):
    d = z.shape[-1]
    s = np.sqrt(z[..., :-1] ** 2 + z[..., 1:] ** 2)
    t = np.sqrt(s) * (1.0 + np.sin(50.0 * s**0.2) ** 2)
    return (np.sum(t, axis=-1) / (d - 1)) ** 2


def _schwefel(z, aux):
    d = z.shape[-1]
    y = _SCHWEFEL_YSTAR + 100.0 * z
    c = np.clip(y, -500.0, 500.0)
    h = c * np.sin(np.sqrt(np.abs(c)))
    excess = np.abs(y - c) / 100.0
    return np.sum(_SCHWEFEL_HSTAR - h, axis=-1) / d + np.sum(excess**2, axis=-1)


def _griewank_rosenbrock(z, aux):
    d = z.shape[-1]
    w = max(1.0, np.sqrt(d) / 8.0) * z + 1.0
    s = 100.0 * (w[..., :-1] ** 2 - w[..., 1:]) ** 2 + (w[..., :-1] - 1.0) ** 2
    return 10.0 * np.sum(s / 4000.0 - np.cos(s), axis=-1) / (d - 1) + 10.0


def _gallagher(z, aux):
    d = z.shape[-1]
    peaks, weights, conds = aux["peaks"], aux["weights"], aux["conds"]
    diff = z[..., None, :] - peaks  # (..., npeaks, d)
    quad = np.sum(conds * diff**2, axis=-1)
    best = np.max(weights * np.exp(-quad / (2.0 * d)), axis=-1)
    return (10.0 - best) ** 2


def _katsuura(z, aux):
    d = z.shape[-1]
    pw = 2.0 ** np.arange(1, 33)
    scaled = z[..., None] * pw
    inner = np.sum(np.abs(scaled - np.round(scaled)) / pw, axis=-1)
    factors = (1.0 + np.arange(1, d + 1) * inner) ** (10.0 / d**1.2)
    return 10.0 / d**2 * (np.prod(factors, axis=-1) - 1.0)


_LUN_MU0 = 2.5


def _lunacek(z, aux):
    d = z.shape[-1]
    s = 1.0 - 1.0 / (2.0 * np.sqrt(d + 20.0) - 8.2)
    mu1 = -np.sqrt((_LUN_MU0**2 - 1.0) / s)
    v = 2.0 * z
    first = np.sum(v**2, axis=-1)
    second = d + s * np.sum((v - (mu1 - _LUN_MU0)) ** 2, axis=-1)
    return np.minimum(first, second) + 10.0 * (d - np.sum(np.cos(2.0 * np.pi * v), axis=-1))


_BASES: dict[str, Callable] = {
    "sphere": _sphere,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "weierstrass": _weierstrass,
    "schaffers": _schaffers,
    "schwefel": _schwefel,
    "griewank-rosenbrock": _griewank_rosenbrock,
    "gallagher-21": _gallagher,
    "katsuura": _katsuura,
    "lunacek": _lunacek,
}

FUNCTION_IDS = tuple(_BASES)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign correction."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _gallagher_aux(d, rotation, x_opt, rng):
    npeaks = 21
    weights = np.empty(npeaks)
    weights[0] = 10.0
    weights[1:] = 1.1 + 8.0 * np.arange(npeaks - 1) / (npeaks - 2)
    alphas = np.empty(npeaks)
    alphas[0] = 1000.0**2
    alphas[1:] = rng.permutation(1000.0 ** (2.0 * np.arange(npeaks - 1) / (npeaks - 2)))
    expo = np.arange(d) / max(d - 1, 1)
    conds = np.array([rng.permutation(a**expo) / a**0.25 for a in alphas])
    locs = rng.uniform(-4.9, 4.9, size=(npeaks - 1, d))
    peaks = np.vstack([np.zeros(d), (locs - x_opt) @ rotation.T])
    return {"peaks": peaks, "weights": weights, "conds": conds}


@dataclass(eq=False)
class BenchmarkFunction:
    """A fixed benchmark instance with an evaluation counter."""

    id: str
    dim: int
    instance_seed: int
    optimum_location: np.ndarray
    optimum_value: float
    rotation: np.ndarray
    _aux: dict = field(default_factory=dict, repr=False)
    _count: int = field(default=0, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def bounds(self) -> np.ndarray:
        return np.tile([LOWER, UPPER], (self.dim, 1))

    @property
    def evaluations(self) -> int:
        return self._count

    def raw(self, X: np.ndarray) -> np.ndarray:
        """Vectorised evaluation of rows of ``X``; does not touch the counter."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {X.shape[-1]}")
        z = (X - self.optimum_location) @ self.rotation.T
        return _BASES[self.id](z, self._aux) + self.optimum_value

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {x.shape}")
        value = float(self.raw(x[None, :])[0])
        with self._lock:
            self._count += 1
        return value

    __call__ = evaluate

    def reset_counter(self) -> None:
        with self._lock:
            self._count = 0


def make_function(id: str, dim: int, instance_seed: int = 0, rotate: bool = True) -> BenchmarkFunction:
    """Build a reproducible instance of benchmark ``id`` in ``dim`` dimensions.

    ``rotate=False`` replaces the random rotation by the identity, which is
    handy when probing a landscape along the coordinate axes.
    """
    if id not in _BASES:
        raise ValueError(f"unknown function id {id!r}; choose from {', '.join(FUNCTION_IDS)}")
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    seq = np.random.SeedSequence([int(instance_seed) & 0xFFFFFFFF, dim, zlib.crc32(id.encode())])
    rng = np.random.default_rng(seq)
    span = 0.8 * (UPPER - LOWER) / 2.0
    x_opt = rng.uniform(-span, span, size=dim)
    f_opt = float(np.round(rng.uniform(-100.0, 100.0), 2))
    rotation = random_rotation(dim, rng) if rotate else np.eye(dim)
    aux = _gallagher_aux(dim, rotation, x_opt, rng) if id == "gallagher-21" else {}
    return BenchmarkFunction(
        id=id,
        dim=dim,
        instance_seed=int(instance_seed),
        optimum_location=x_opt,
        optimum_value=f_opt,
        rotation=rotation,
        _aux=aux,
    )


def evaluate(f: BenchmarkFunction, x) -> float:
    return f.evaluate(x)

"""Latin hypercube designs."""

from __future__ import annotations

import numpy as np


def lhs(n0: int, bounds, rng_seed=None) -> np.ndarray:
    """Plain Latin hypercube sample of ``n0`` points inside ``bounds``.

    Each coordinate range is cut into ``n0`` equal-width strata and every
    stratum receives exactly one point, placed uniformly at random inside it.

    Parameters
    ----------
    n0 : int
        Number of points.
    bounds : array_like, shape (d, 2)
        Lower and upper bound per coordinate.
    rng_seed : int or numpy.random.Generator, optional

    Returns
    -------
    ndarray, shape (n0, d)
    """
    n0 = int(n0)
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(lo >= hi):
        raise ValueError("degenerate bounds: every lower bound must be below its upper bound")
    rng = np.random.default_rng(rng_seed)
    d = len(lo)
    strata = np.argsort(rng.random((n0, d)), axis=0)
    u = (strata + rng.random((n0, d))) / n0
    # u == 1.0 is impossible but keep points strictly inside the last stratum
    u = np.minimum(u, np.nextafter(1.0, 0.0))
    return lo + u * (hi - lo)


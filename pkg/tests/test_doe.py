import numpy as np
import pytest

from kpcabo.doe import lhs


def _occupancy(points, bounds):
    n, d = points.shape
    counts = np.zeros((n, d), dtype=int)
    for j in range(d):
        lo, hi = bounds[j]
        for v in points[:, j]:
            k = min(int((v - lo) / (hi - lo) * n), n - 1)
            counts[k, j] += 1
    return counts


def test_single_point_inside_unit_square():
    x = lhs(1, [[0, 1], [0, 1]], 3)
    assert x.shape == (1, 2)
    assert np.all((x > 0) & (x < 1))


def test_four_points_one_per_quarter():
    x = lhs(4, [[0, 1]], 11)[:, 0]
    assert sorted(np.floor(x * 4).astype(int)) == [0, 1, 2, 3]


def test_sixty_points_twenty_dims_all_strata_filled():
    bounds = np.tile([-5.0, 5.0], (20, 1))
    x = lhs(60, bounds, 7)
    assert np.all(_occupancy(x, bounds) == 1)
    assert np.all((x >= -5) & (x <= 5))


@pytest.mark.parametrize("n0,d", [(3, 2), (17, 5), (100, 3)])
def test_stratification_on_asymmetric_bounds(n0, d):
    bounds = np.column_stack([np.arange(d) - 2.0, np.arange(d) * 3.0 + 1.0])
    assert np.all(_occupancy(lhs(n0, bounds, n0), bounds) == 1)


def test_seed_reproducibility():
    b = [[0, 1]] * 4
    np.testing.assert_array_equal(lhs(10, b, 5), lhs(10, b, 5))
    assert not np.allclose(lhs(10, b, 5), lhs(10, b, 6))


def test_errors():
    with pytest.raises(ValueError):
        lhs(0, [[0, 1]], 0)
    with pytest.raises(ValueError, match="degenerate"):
        lhs(5, [[0, 1], [2, 2]], 0)

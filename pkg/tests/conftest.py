import numpy as np
import pytest

from sizeshape.core import (
    CdfGrid,
    DensityGrid,
    MonotoneDecomposition,
    PositiveDecomposition,
    unit_grid,
)


def uniform_density(m: int) -> DensityGrid:
    return DensityGrid(np.ones(m))


def interval_density(m: int, lo: float, hi: float, floor: float = 0.0) -> DensityGrid:
    """Uniform density on [lo, hi] sampled onto the m-point grid; an optional
    tiny floor keeps it strictly positive for decomposition use."""
    t = unit_grid(m)
    vals = np.maximum(np.where((t >= lo) & (t <= hi), 1.0, 0.0), floor)
    return DensityGrid(vals / np.trapezoid(vals, t))


def random_positive_decomposition(rng, m: int = 101) -> PositiveDecomposition:
    vals = rng.uniform(0.2, 2.0, m)
    vals /= np.trapezoid(vals, unit_grid(m))
    return PositiveDecomposition(float(rng.uniform(0.5, 3.0)), DensityGrid(vals))


def random_monotone_decomposition(rng, m: int = 101) -> MonotoneDecomposition:
    incr = rng.uniform(0.05, 1.0, m - 1)
    cdf = np.concatenate(([0.0], np.cumsum(incr)))
    cdf /= cdf[-1]
    return MonotoneDecomposition(
        float(rng.uniform(0.5, 3.0)), float(rng.uniform(-2.0, 2.0)), CdfGrid(cdf)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def wasserstein_by_cdf_inversion(f1: DensityGrid, f2: DensityGrid) -> float:
    """Independent oracle: integrate |F1^-1 - F2^-1|^2 where each inverse is
    found by bisection over a fine grid of probability levels."""
    t = f1.abscissae

    def cdf_values(f):
        vals = f.ordinates
        c = np.concatenate(
            ([0.0], np.cumsum(0.5 * np.diff(t) * (vals[1:] + vals[:-1])))
        )
        return c / c[-1]

    c1, c2 = cdf_values(f1), cdf_values(f2)
    levels = (np.arange(4000) + 0.5) / 4000

    def invert(cvals):
        lo = np.zeros_like(levels)
        hi = np.ones_like(levels)
        for _ in range(45):
            mid = 0.5 * (lo + hi)
            below = np.interp(mid, t, cvals) < levels
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    diff = invert(c1) - invert(c2)
    import math

    return math.sqrt(np.mean(diff**2))

"""Conversions among density / CDF / quantile representations on the shared
uniform grid, the 2-Wasserstein distance, orthogonal projection onto quantile
space, and weighted quantile barycenters.

The quantile function is the working coordinate system: for univariate
distributions the 2-Wasserstein distance is the L2 distance between quantile
functions, and weighted Fréchet means of distributions reduce to projected
pointwise averages of quantile grids.
"""

from __future__ import annotations

import numpy as np

from .core import CdfGrid, DensityGrid, QuantileGrid, trapezoid_uniform, unit_grid
from .errors import (
    DegenerateDistributionError,
    DomainError,
    GridMismatchError,
    InvalidDensityError,
)

# Slope floor used when differentiating a quantile function with flat
# stretches; perturbs the represented distribution by O(eps).
FLAT_SLOPE_EPS = 1e-8


def _left_inverse(x: np.ndarray, f: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Generalized inverse inf{x : f(x) >= q} of a nondecreasing f, linear
    between strictly increasing knots, left-continuous across flat runs."""
    idx = np.searchsorted(f, queries, side="left")
    idx = np.clip(idx, 1, len(f) - 1)
    lo = idx - 1
    denom = f[idx] - f[lo]
    safe = np.where(denom > 0, denom, 1.0)
    frac = np.where(denom > 0, (queries - f[lo]) / safe, 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    return x[lo] + frac * (x[idx] - x[lo])


def _right_inverse(x: np.ndarray, f: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Dual inverse sup{x : f(x) <= q}; flat runs of f map to the run's top,
    so point masses keep their full mass under CDF reconstruction."""
    idx = np.searchsorted(f, queries, side="right")
    idx = np.clip(idx, 1, len(f) - 1)
    lo = idx - 1
    denom = f[idx] - f[lo]
    safe = np.where(denom > 0, denom, 1.0)
    frac = np.where(denom > 0, (queries - f[lo]) / safe,
                    np.where(queries >= f[lo], 1.0, 0.0))
    frac = np.clip(frac, 0.0, 1.0)
    return x[lo] + frac * (x[idx] - x[lo])


def quantile_from_density(f: DensityGrid) -> QuantileGrid:
    """Quantile function of the distribution with density ``f``.

    The cumulative trapezoid integral is renormalized to end exactly at 1
    (removing quadrature drift) and inverted onto the uniform probability
    levels with the left-continuous convention.
    """
    vals = f.ordinates
    step = f.step
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * step * (vals[1:] + vals[:-1]))))
    total = cdf[-1]
    if total <= 0:
        raise InvalidDensityError("density integral is not positive")
    cdf /= total
    levels = unit_grid(len(vals))
    return QuantileGrid(_left_inverse(f.abscissae, cdf, levels))


def quantile_from_cdf(cdf: CdfGrid) -> QuantileGrid:
    """Quantile function Q(p) = inf{t : F(t) >= p} on the uniform levels."""
    levels = unit_grid(len(cdf))
    return QuantileGrid(_left_inverse(cdf.abscissae, cdf.ordinates, levels))


def cdf_from_quantile(q: QuantileGrid) -> CdfGrid:
    """Distribution function of the measure with quantile function ``q``.

    Right-continuous: flat stretches of ``q`` (atoms) appear as jumps of F
    carrying the full flat-run mass.
    """
    grid = unit_grid(len(q))
    return CdfGrid(_right_inverse(q.levels, q.ordinates, grid))


def density_from_quantile(q: QuantileGrid) -> DensityGrid:
    """Density of the measure with quantile function ``q``.

    Differentiates the inverse of ``q`` numerically after flooring flat
    stretches at a tiny slope, then renormalizes to unit integral. Fails if
    more than half of the levels are flat (a near-point mass has no usable
    density on the grid).
    """
    vals = q.ordinates
    m = len(vals)
    step = q.step
    dq = np.diff(vals)
    flat = dq < FLAT_SLOPE_EPS * step
    if flat.sum() > 0.5 * len(dq):
        raise DegenerateDistributionError(
            "quantile function is flat over more than half of the levels"
        )
    dq = np.maximum(dq, FLAT_SLOPE_EPS * step)
    regular = np.concatenate(([vals[0]], vals[0] + np.cumsum(dq)))
    grid = unit_grid(m)
    cdf = np.interp(grid, regular, unit_grid(m))
    density = np.clip(np.gradient(cdf, step), 0.0, None)
    total = trapezoid_uniform(density, step)
    if total <= 0:
        raise DegenerateDistributionError("reconstructed density has zero mass")
    return DensityGrid(density / total)


def wasserstein(q1: QuantileGrid, q2: QuantileGrid) -> float:
    """2-Wasserstein distance: L2 distance between quantile grids."""
    if len(q1) != len(q2):
        raise GridMismatchError(
            f"probability grids differ: {len(q1)} vs {len(q2)} levels"
        )
    diff2 = (q1.ordinates - q2.ordinates) ** 2
    return float(np.sqrt(trapezoid_uniform(diff2, q1.step)))


def _pava(values: np.ndarray) -> np.ndarray:
    """L2 isotonic regression (nondecreasing) with uniform weights.

    Linear-time pool-adjacent-violators with block merging; operates on
    Python lists since the index-chasing loop dominates.
    """
    y = values.astype(float).tolist()
    n = len(y)
    weight = [1.0] * n
    target = list(range(n))
    i = 0
    while i < n:
        k = target[i] + 1
        if k == n:
            break
        if y[i] < y[k]:
            i = k
            continue
        sum_wy = weight[i] * y[i]
        sum_w = weight[i]
        while True:
            prev_y = y[k]
            sum_wy += weight[k] * y[k]
            sum_w += weight[k]
            k = target[k] + 1
            if k == n or prev_y < y[k]:
                y[i] = sum_wy / sum_w
                weight[i] = sum_w
                target[i] = k - 1
                target[k - 1] = i
                if i > 0:
                    i = target[i - 1]
                break
    out = np.empty(n)
    i = 0
    while i < n:
        k = target[i] + 1
        out[i:k] = y[i]
        i = k
    return out


def isotonic(values) -> np.ndarray:
    """L2-closest nondecreasing vector (no box constraint)."""
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("isotonic input must be finite")
    if np.all(np.diff(arr) >= 0):
        return arr.copy()
    return _pava(arr)


def project_to_unit_monotone(values: np.ndarray) -> np.ndarray:
    """Exact L2 projection of a vector onto {nondecreasing, entries in [0,1]}.

    Clipping the isotonic fit to the box is the exact constrained projection;
    already-feasible inputs are returned unchanged.
    """
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("projection input must be finite")
    if np.all(np.diff(arr) >= 0) and arr[0] >= 0.0 and arr[-1] <= 1.0:
        return arr.copy()
    return np.clip(_pava(arr), 0.0, 1.0)


def project_to_quantile_space(raw) -> QuantileGrid:
    """Orthogonal projection of raw per-level values onto quantile space."""
    return QuantileGrid(project_to_unit_monotone(raw))


def quantile_barycenter(qs, weights=None) -> QuantileGrid:
    """Projected weighted mean of quantile grids.

    ``weights`` must average to 1 (global/local Fréchet weights do by
    construction); omit them for the equally weighted Fréchet mean. Negative
    weights are allowed — the projection restores monotonicity when the raw
    mean leaves quantile space.
    """
    qs = list(qs)
    if not qs:
        raise DomainError("barycenter of an empty collection")
    m = len(qs[0])
    for q in qs[1:]:
        if len(q) != m:
            raise GridMismatchError("quantile grids differ in resolution")
    if weights is None:
        weights = np.ones(len(qs))
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(qs),):
            raise DomainError("one weight per quantile grid required")
        if abs(weights.mean() - 1.0) > 1e-8:
            raise DomainError(
                f"weights must average to 1, got mean {weights.mean()!r}"
            )
    stacked = np.stack([q.ordinates for q in qs])
    raw = (weights[:, None] * stacked).mean(axis=0)
    return project_to_quantile_space(raw)

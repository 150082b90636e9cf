"""Domain types for size-shape decomposed functional data, and the product
metrics that combine a Euclidean distance on sizes with a 2-Wasserstein
distance on shapes.

All shape-valued objects (densities, CDFs, quantile functions) live on a
shared uniform grid of ``m`` points on [0, 1]; the trapezoid rule is the
single quadrature used throughout, which is exact for the piecewise-linear
representations these grids encode. Every type is immutable after
construction and every operation is pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConstraintError, DomainError, GridMismatchError

DEFAULT_SHAPE_POINTS = 1001

_MONOTONE_SLACK = 1e-12
_BOUNDS_SLACK = 1e-12


@lru_cache(maxsize=128)
def unit_grid(m: int) -> np.ndarray:
    """Shared read-only uniform grid of ``m`` points on [0, 1]."""
    if m < 2:
        raise DomainError(f"grid needs at least 2 points, got {m}")
    grid = np.linspace(0.0, 1.0, m)
    grid.setflags(write=False)
    return grid


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"expected a 1-d sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("values must be finite")
    arr.setflags(write=False)
    return arr


def trapezoid_uniform(values: np.ndarray, step: float) -> float:
    """Trapezoid integral of samples on a uniform grid with spacing ``step``."""
    return float(step * (values.sum() - 0.5 * (values[0] + values[-1])))


class Constraint(enum.Enum):
    POSITIVE = "positive"
    MONOTONE = "monotone"
    UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time points inside [0, 1], at least two of them."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if len(pts) < 2:
            raise DomainError("time grid needs at least 2 points")
        if not np.all(np.diff(pts) > 0):
            raise DomainError("time grid must be strictly increasing")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise DomainError("time grid must lie within [0, 1]")
        object.__setattr__(self, "points", pts)

    @classmethod
    @lru_cache(maxsize=128)
    def uniform(cls, m: int = DEFAULT_SHAPE_POINTS) -> "TimeGrid":
        return cls(unit_grid(m))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class SampledTrajectory:
    """A function on [0, 1] given by values on a finite grid, plus the shape
    constraint it is declared to satisfy."""

    grid: TimeGrid
    values: np.ndarray
    constraint: Constraint = Constraint.UNCONSTRAINED

    def __post_init__(self):
        vals = _frozen_array(self.values)
        if len(vals) != len(self.grid):
            raise DomainError(
                f"{len(vals)} values on a grid of {len(self.grid)} points"
            )
        if self.constraint is Constraint.POSITIVE and not np.all(vals > 0):
            raise ConstraintError("positive trajectory has nonpositive values")
        if self.constraint is Constraint.MONOTONE and np.any(np.diff(vals) < 0):
            raise ConstraintError("monotone trajectory has decreasing values")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def evaluate(traj: SampledTrajectory, t):
    """Piecewise-linear interpolation of a trajectory at ``t`` in [0, 1].

    Exact at grid points; constant extrapolation between the domain boundary
    and the first/last grid point. Accepts a scalar or an array of times.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise DomainError("evaluation time outside [0, 1]")
    out = np.interp(t_arr, traj.grid.points, traj.values)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


class _UnitIntervalGrid:
    """Mixin for grid-valued shapes on the shared uniform abscissa grid."""

    ordinates: np.ndarray

    @property
    def abscissae(self) -> np.ndarray:
        return unit_grid(len(self.ordinates))

    @property
    def step(self) -> float:
        return 1.0 / (len(self.ordinates) - 1)

    def __len__(self) -> int:
        return len(self.ordinates)


@dataclass(frozen=True, eq=False)
class DensityGrid(_UnitIntervalGrid):
    """Nonnegative values on the uniform grid with unit trapezoid integral."""

    ordinates: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.ordinates)
        if len(vals) < 2:
            raise DomainError("density grid needs at least 2 points")
        if np.any(vals < 0):
            raise DomainError("density has negative values")
        total = trapezoid_uniform(vals, 1.0 / (len(vals) - 1))
        if abs(total - 1.0) > 1e-8:
            raise DomainError(f"density integrates to {total!r}, not 1")
        object.__setattr__(self, "ordinates", vals)


def _validate_monotone_unit(vals: np.ndarray, what: str) -> None:
    if len(vals) < 2:
        raise DomainError(f"{what} needs at least 2 points")
    if np.any(np.diff(vals) < -_MONOTONE_SLACK):
        raise DomainError(f"{what} must be nondecreasing")
    if vals[0] < -_BOUNDS_SLACK or vals[-1] > 1.0 + _BOUNDS_SLACK:
        raise DomainError(f"{what} values must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class CdfGrid(_UnitIntervalGrid):
    """Nondecreasing values in [0, 1] on the uniform grid."""

    ordinates: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.ordinates)
        _validate_monotone_unit(vals, "CDF grid")
        object.__setattr__(self, "ordinates", vals)


@dataclass(frozen=True, eq=False)
class QuantileGrid(_UnitIntervalGrid):
    """Nondecreasing values in [0, 1] on uniform probability levels."""

    ordinates: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.ordinates)
        _validate_monotone_unit(vals, "quantile grid")
        object.__setattr__(self, "ordinates", vals)

    @property
    def levels(self) -> np.ndarray:
        return self.abscissae


@dataclass(frozen=True, eq=False)
class PositiveDecomposition:
    """Scalar size (total mass) plus a strictly positive shape density."""

    size: float
    shape: DensityGrid

    def __post_init__(self):
        if not (self.size > 0):
            raise ConstraintError(f"size must be positive, got {self.size}")
        if not np.all(self.shape.ordinates > 0):
            raise ConstraintError("positive shape density must be positive")


@dataclass(frozen=True, eq=False)
class MonotoneDecomposition:
    """Size pair (range, minimum) plus a shape CDF pinned to F(0)=0, F(1)=1."""

    range: float
    minimum: float
    shape: CdfGrid

    def __post_init__(self):
        if not (self.range > 0):
            raise ConstraintError(f"range must be positive, got {self.range}")
        endpoints = self.shape.ordinates[[0, -1]]
        if abs(endpoints[0]) > 1e-8 or abs(endpoints[1] - 1.0) > 1e-8:
            raise ConstraintError("shape CDF must run from 0 at t=0 to 1 at t=1")


@dataclass(frozen=True)
class MetricWeights:
    """Nonnegative weights for the size and shape terms of the product metric."""

    w_size: float = 1.0
    w_shape: float = 1.0

    def __post_init__(self):
        if self.w_size < 0 or self.w_shape < 0:
            raise DomainError("metric weights must be nonnegative")
        if self.w_size == 0 and self.w_shape == 0:
            raise DomainError("metric weights cannot both be zero")


DEFAULT_WEIGHTS = MetricWeights()


@dataclass(frozen=True, eq=False)
class RawObservations:
    """Noisy measurements of one subject at strictly increasing times."""

    times: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen_array(self.values)
        if len(vals) != len(self.times):
            raise DomainError("observation times and values differ in length")
        if len(vals) < 2:
            raise DomainError("need at least 2 observations per subject")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class LongitudinalDataset:
    """A sample of subjects with raw observations and optional covariates."""

    subjects: tuple
    covariates: dict | None = None

    def __post_init__(self):
        subjects = tuple((str(sid), obs) for sid, obs in self.subjects)
        ids = [sid for sid, _ in subjects]
        if len(set(ids)) != len(ids):
            raise DomainError("subject ids must be unique")
        if self.covariates is not None:
            cov = {str(k): tuple(float(v) for v in vs)
                   for k, vs in self.covariates.items()}
            if set(cov) != set(ids):
                missing = sorted(set(ids) ^ set(cov))
                raise DomainError(f"covariate ids do not match subjects: {missing}")
            widths = {len(v) for v in cov.values()}
            if len(widths) > 1:
                raise DomainError("covariate rows have inconsistent dimensions")
            object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "subjects", subjects)

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def ids(self) -> tuple:
        return tuple(sid for sid, _ in self.subjects)

    def observations(self, subject_id: str) -> RawObservations:
        for sid, obs in self.subjects:
            if sid == subject_id:
                return obs
        raise KeyError(subject_id)

    def covariate_rows(self) -> np.ndarray:
        """Covariate matrix with rows aligned to the subject order."""
        if self.covariates is None:
            raise DomainError("dataset carries no covariates")
        return np.array([self.covariates[sid] for sid in self.ids], dtype=float)


def _check_same_grid(a, b) -> None:
    if len(a) != len(b):
        raise GridMismatchError(
            f"shape grids differ in resolution: {len(a)} vs {len(b)}"
        )


def metric_positive(
    a: PositiveDecomposition,
    b: PositiveDecomposition,
    w: MetricWeights = DEFAULT_WEIGHTS,
) -> float:
    """Product distance sqrt(w_size (τa-τb)^2 + w_shape d_W^2(fa, fb))."""
    from . import quantile  # deferred: quantile depends on the types above

    _check_same_grid(a.shape, b.shape)
    d2 = w.w_size * (a.size - b.size) ** 2
    if w.w_shape > 0:
        qa = quantile.quantile_from_density(a.shape)
        qb = quantile.quantile_from_density(b.shape)
        d2 += w.w_shape * quantile.wasserstein(qa, qb) ** 2
    return float(np.sqrt(d2))


def metric_monotone(
    a: MonotoneDecomposition,
    b: MonotoneDecomposition,
    w: MetricWeights = DEFAULT_WEIGHTS,
) -> float:
    """Product distance with Euclidean size term on (range, minimum) pairs."""
    from . import quantile

    _check_same_grid(a.shape, b.shape)
    d2 = w.w_size * ((a.range - b.range) ** 2 + (a.minimum - b.minimum) ** 2)
    if w.w_shape > 0:
        qa = quantile.quantile_from_cdf(a.shape)
        qb = quantile.quantile_from_cdf(b.shape)
        d2 += w.w_shape * quantile.wasserstein(qa, qb) ** 2
    return float(np.sqrt(d2))


def l2_distance(a: SampledTrajectory, b: SampledTrajectory) -> float:
    """L2([0,1]) distance between two trajectories on the same grid."""
    if len(a) != len(b) or not np.array_equal(a.grid.points, b.grid.points):
        raise GridMismatchError("trajectories live on different grids")
    diff2 = (a.values - b.values) ** 2
    return float(np.sqrt(np.trapezoid(diff2, a.grid.points)))

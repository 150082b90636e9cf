"""Transformation-approach competitors for Fréchet-mean estimation.

Instead of working intrinsically in the constrained space, these estimators
map to an unconstrained space (log values for positive data, log derivatives
for monotone data), average there, and map back — incurring a transformation
bias that the decomposition approach avoids.
"""

from __future__ import annotations

import numpy as np

from .core import Constraint, SampledTrajectory, TimeGrid
from .errors import ConstraintError, DomainError, GridMismatchError

_DERIVATIVE_FLOOR = 1e-8


def _stack_common_grid(trajs) -> tuple[TimeGrid, np.ndarray]:
    trajs = list(trajs)
    if not trajs:
        raise DomainError("baseline mean of an empty sample")
    grid = trajs[0].grid
    for t in trajs[1:]:
        if len(t.grid) != len(grid) or not np.array_equal(
            t.grid.points, grid.points
        ):
            raise GridMismatchError("trajectories live on different grids")
    return grid, np.stack([t.values for t in trajs])


def baseline_mean_positive(trajs) -> SampledTrajectory:
    """Pointwise geometric mean: exponentiated mean of log trajectories."""
    grid, values = _stack_common_grid(trajs)
    if np.any(values <= 0):
        raise ConstraintError("baseline requires strictly positive trajectories")
    mean = np.exp(np.log(values).mean(axis=0))
    return SampledTrajectory(grid, mean, Constraint.POSITIVE)


def baseline_mean_monotone(trajs) -> SampledTrajectory:
    """Log-derivative transformation mean for increasing trajectories.

    Per-segment slopes are floored, log-averaged across the sample,
    exponentiated and integrated back up; the normalized cumulative curve is
    rescaled by the sample means of the minimum and range. A singleton sample
    is reproduced exactly.
    """
    grid, values = _stack_common_grid(trajs)
    if np.any(np.diff(values, axis=1) <= 0):
        raise ConstraintError("baseline requires strictly increasing trajectories")
    dt = np.diff(grid.points)
    slopes = np.maximum(np.diff(values, axis=1) / dt, _DERIVATIVE_FLOOR)
    mean_slope = np.exp(np.log(slopes).mean(axis=0))
    cumulative = np.concatenate(([0.0], np.cumsum(mean_slope * dt)))
    shape = cumulative / cumulative[-1]
    minimum = values[:, 0].mean()
    rng = (values[:, -1] - values[:, 0]).mean()
    return SampledTrajectory(grid, minimum + rng * shape, Constraint.MONOTONE)

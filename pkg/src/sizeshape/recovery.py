"""Trajectory recovery from noisy longitudinal observations by bin averaging.

The estimator is a step function: [0, 1] is split into L = 1/gamma equal
bins, and the value on each bin is the mean of the observations falling into
it. Empty bins inherit the nearest nonempty bin's value (ties broken toward
the left). No shape constraint is enforced here — raw recovery may violate
positivity or monotonicity, and downstream decomposition repairs that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Constraint, RawObservations, SampledTrajectory, TimeGrid
from .errors import DomainError, InsufficientDataError

__all__ = [
    "BinSpec",
    "RawObservations",
    "default_bin_width",
    "default_bin_width_irregular",
    "recover_trajectory",
]

# Tolerance for right-closed bin membership at boundaries, t = l*gamma -> bin l.
_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class BinSpec:
    """Equal-width bins B_l = [(l-1) width, l width] covering [0, 1]."""

    width: float

    def __post_init__(self):
        if not (0 < self.width <= 1):
            raise DomainError(f"bin width must be in (0, 1], got {self.width}")

    @property
    def count(self) -> int:
        return max(1, round(1.0 / self.width))

    @classmethod
    def from_count(cls, count: int) -> "BinSpec":
        if count < 1:
            raise DomainError("need at least one bin")
        return cls(1.0 / count)

    def indices(self, times: np.ndarray) -> np.ndarray:
        """0-based bin index for each time; right-closed boundaries."""
        raw = np.ceil(np.asarray(times) / self.width - _BOUNDARY_TOL) - 1
        return np.clip(raw.astype(int), 0, self.count - 1)


def default_bin_width(n: int, num_obs: int) -> float:
    """Rule-of-thumb bin width (log n / N)^(1/3) for equidistant designs,
    clamped to [1/N, 0.5] and snapped so the bin count is an integer."""
    if n < 2 or num_obs < 2:
        raise DomainError("need n >= 2 subjects and N >= 2 observations")
    raw = (math.log(n) / num_obs) ** (1.0 / 3.0)
    clamped = min(max(raw, 1.0 / num_obs), 0.5)
    # snap up to the next integer bin count: stays within both clamps (the
    # bounds have integer reciprocals) and distinct N get distinct widths
    return 1.0 / math.ceil(1.0 / clamped - _BOUNDARY_TOL)


def default_bin_width_irregular(n: int, max_spacing: float) -> float:
    """Bin width (Delta0 log n)^(1/3) for irregular designs with maximum grid
    spacing ``max_spacing``, clamped so bins are never narrower than a gap."""
    if not (0 < max_spacing < 1):
        raise DomainError("max grid spacing must lie in (0, 1)")
    if n < 2:
        raise DomainError("need n >= 2 subjects")
    raw = (max_spacing * math.log(n)) ** (1.0 / 3.0)
    lo = min(max_spacing, 0.5)
    clamped = min(max(raw, lo), 0.5)
    # snapping down (floor) can only widen bins, preserving width >= spacing
    return 1.0 / math.floor(1.0 / clamped + _BOUNDARY_TOL)


def recover_trajectory(
    obs: RawObservations, bins: BinSpec, out_grid: TimeGrid
) -> SampledTrajectory:
    """Bin-averaged step estimate of the latent trajectory on ``out_grid``."""
    L = bins.count
    idx = bins.indices(obs.times.points)
    counts = np.bincount(idx, minlength=L)
    if not counts.any():
        raise InsufficientDataError("no observations fall into any bin")
    sums = np.bincount(idx, weights=obs.values, minlength=L)
    means = np.full(L, np.nan)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]

    empty = np.flatnonzero(~filled)
    if empty.size:
        nonempty = np.flatnonzero(filled)
        pos = np.searchsorted(nonempty, empty)
        left = nonempty[np.clip(pos - 1, 0, len(nonempty) - 1)]
        right = nonempty[np.clip(pos, 0, len(nonempty) - 1)]
        # ties toward the left: strict inequality required to pick the right
        use_right = (empty - left) > (right - empty)
        means[empty] = np.where(use_right, means[right], means[left])

    values = means[bins.indices(out_grid.points)]
    return SampledTrajectory(out_grid, values, Constraint.UNCONSTRAINED)

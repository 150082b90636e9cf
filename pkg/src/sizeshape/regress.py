"""Global and local Fréchet regression of decomposition components on
Euclidean predictors.

Both flavors reduce to weighted Fréchet means: global weights come from the
multiple-linear-regression characterization (no tuning parameter, arbitrary
predictor dimension, one-hot categorical encodings included); local weights
come from univariate local-linear smoothing with a kernel and bandwidth.
Sizes are regressed by floored weighted means, shapes by projected weighted
quantile averages, and the fitted trajectory is recomposed from the two.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import quantile
from .core import (
    MonotoneDecomposition,
    PositiveDecomposition,
    QuantileGrid,
    SampledTrajectory,
)
from .decomp import (
    RANGE_FLOOR,
    SIZE_FLOOR,
    _positive_shape,
    recompose_monotone,
    recompose_positive,
)
from .errors import (
    DegenerateDesignError,
    DomainError,
    EmptyNeighborhoodError,
    IllConditionedDesignError,
)

_MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class CovariateMatrix:
    """n predictor vectors of dimension p, n > p."""

    rows: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rows, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DomainError(f"expected an (n, p) matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("covariates must be finite")
        n, p = arr.shape
        if n <= p:
            raise DomainError(f"need more subjects than predictors, got n={n}, p={p}")
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


class KernelFamily(enum.Enum):
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric kernel density and bandwidth for local weights."""

    family: KernelFamily = KernelFamily.EPANECHNIKOV
    bandwidth: float = 0.1

    def __post_init__(self):
        if not (self.bandwidth > 0):
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth}")

    def values(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.family is KernelFamily.EPANECHNIKOV:
            return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
        return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def global_weights(X: CovariateMatrix, x, ridge: bool = False) -> np.ndarray:
    """Empirical global Fréchet weights 1 + (X_i - mean)' Cov^{-1} (x - mean).

    The covariance uses the biased 1/n normalizer. Weights average to 1 and
    reproduce affine functions of the predictors exactly; they may be
    negative. ``ridge`` adds a tiny diagonal stabilizer for near-singular
    designs (off by default).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (X.p,):
        raise DomainError(f"predictor has dimension {x.shape}, expected ({X.p},)")
    xbar = X.rows.mean(axis=0)
    centered = X.rows - xbar
    cov = centered.T @ centered / X.n
    if ridge:
        cov = cov + (1e-8 * np.trace(cov) / X.p) * np.eye(X.p)
    if np.linalg.cond(cov) > _MAX_CONDITION:
        raise IllConditionedDesignError(
            "covariate covariance is singular or nearly so"
        )
    direction = np.linalg.solve(cov, x - xbar)
    return 1.0 + centered @ direction


def local_weights(X: CovariateMatrix, x: float, kernel: KernelSpec) -> np.ndarray:
    """Empirical local-linear weights for a scalar predictor.

    Satisfy mean(s) = 1 and mean(s (X_i - x)) = 0 by the local-linear moment
    identities.
    """
    if X.p != 1:
        raise DomainError("local weights require a univariate predictor")
    diffs = X.rows[:, 0] - float(x)
    h = kernel.bandwidth
    kvals = kernel.values(diffs / h) / h
    if not np.any(kvals > 0):
        raise EmptyNeighborhoodError(
            f"no observations receive kernel weight at x={x}"
        )
    # centered moments: u0 u2 - u1^2 == u0 * weighted variance, which avoids
    # the cancellation that hides degenerate one-point neighborhoods
    u0 = kvals.mean()
    center = (kvals * diffs).mean() / u0
    centered = diffs - center
    v2 = (kvals * centered * centered).mean()
    sigma0_sq = u0 * v2
    if sigma0_sq <= 0:
        raise DegenerateDesignError(
            "local-linear design is degenerate at this point"
        )
    return kvals * (v2 - center * u0 * centered) / sigma0_sq


def regress_size(sizes, weights, floor: float) -> float:
    """Weighted-mean size regression, clamped below at ``floor``."""
    sizes = np.asarray(sizes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if sizes.shape != weights.shape:
        raise DomainError("sizes and weights differ in length")
    return float(max(floor, (weights * sizes).mean()))


def regress_shape(quantiles, weights) -> QuantileGrid:
    """Weighted Fréchet shape regression: projected quantile average."""
    return quantile.quantile_barycenter(quantiles, weights)


def _weights_for(X: CovariateMatrix, x, mode: str, kernel: KernelSpec | None):
    if mode == "global":
        return global_weights(X, x)
    if mode == "local":
        if kernel is None:
            raise DomainError("local mode requires a KernelSpec")
        return local_weights(X, float(np.ravel(x)[0]), kernel)
    raise DomainError(f"unknown regression mode {mode!r}")


def fit_positive_regression(
    ds,
    X: CovariateMatrix,
    x,
    mode: str = "global",
    kernel: KernelSpec | None = None,
    m: int | None = None,
) -> tuple[PositiveDecomposition, SampledTrajectory]:
    """Conditional positive decomposition and trajectory at predictor ``x``."""
    ds = list(ds)
    if len(ds) != X.n:
        raise DomainError("one decomposition per covariate row required")
    weights = _weights_for(X, x, mode, kernel)
    size = regress_size([d.size for d in ds], weights, SIZE_FLOOR)
    qs = [quantile.quantile_from_density(d.shape) for d in ds]
    qfit = regress_shape(qs, weights)
    m = m or len(ds[0].shape)
    shape = _positive_shape(quantile.density_from_quantile(qfit).ordinates, m)
    fit = PositiveDecomposition(size, shape)
    return fit, recompose_positive(fit)


def fit_monotone_regression(
    ds,
    X: CovariateMatrix,
    x,
    mode: str = "global",
    kernel: KernelSpec | None = None,
) -> tuple[MonotoneDecomposition, SampledTrajectory]:
    """Conditional monotone decomposition and trajectory at predictor ``x``.

    The range is floored at the near-constant threshold; the minimum is a
    plain weighted mean (it may be negative).
    """
    ds = list(ds)
    if len(ds) != X.n:
        raise DomainError("one decomposition per covariate row required")
    weights = _weights_for(X, x, mode, kernel)
    rng = regress_size([d.range for d in ds], weights, RANGE_FLOOR)
    minimum = regress_size([d.minimum for d in ds], weights, -math.inf)
    qs = [quantile.quantile_from_cdf(d.shape) for d in ds]
    qfit = regress_shape(qs, weights)
    fit = MonotoneDecomposition(rng, minimum, quantile.cdf_from_quantile(qfit))
    return fit, recompose_monotone(fit)


def default_bandwidth(X: CovariateMatrix) -> float:
    """Rule-of-thumb bandwidth sd(X) * n^(-1/5) for a scalar predictor."""
    if X.p != 1:
        raise DomainError("bandwidth rule requires a univariate predictor")
    if X.n < 10:
        raise DomainError("bandwidth rule needs at least 10 subjects")
    sd = float(X.rows[:, 0].std())
    if sd == 0:
        raise DegenerateDesignError("predictor has zero variance")
    return sd * X.n ** (-0.2)

"""Seeded generators for positive, monotone and regression simulation designs.

Shapes are truncated normal densities (positive kind) or CDFs (monotone kind)
on [0, 1]; sizes are uniform draws, or linear functions of a covariate plus
truncated-normal component noise in the regression designs. Observations are
the trajectory values on an equidistant midpoint grid, contaminated with
white measurement noise of standard deviation ``nu0``.

Each subject draws from its own RNG stream derived from (seed, subject
index), so datasets are bit-identical under any generation parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import ndtr, ndtri

from .core import (
    CdfGrid,
    DEFAULT_SHAPE_POINTS,
    DensityGrid,
    LongitudinalDataset,
    MonotoneDecomposition,
    PositiveDecomposition,
    QuantileGrid,
    RawObservations,
    TimeGrid,
    trapezoid_uniform,
    unit_grid,
)
from .decomp import RANGE_FLOOR, SIZE_FLOOR
from .errors import ConfigError, UnderflowError
from .regress import CovariateMatrix

_MIN_NORMALIZER = 1e-300
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(u):
    return np.exp(-0.5 * np.square(u)) / _SQRT_2PI


def _validate_common(n: int, num_obs: int, nu0: float, seed: int) -> None:
    if n < 2 or num_obs < 2:
        raise ConfigError("need n >= 2 subjects and N >= 2 observations")
    if nu0 < 0:
        raise ConfigError("noise level nu0 must be nonnegative")
    if seed < 0:
        raise ConfigError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class PositiveSimConfig:
    """Positive-data design: size ~ U(a_tau, b_tau), truncated normal shape
    with center ~ U(a_mu, b_mu) and scale sigma."""

    n: int
    N: int
    a_tau: float = 0.0
    b_tau: float = 2.0
    a_mu: float = 0.0
    b_mu: float = 1.0
    sigma: float = 1.0
    nu0: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _validate_common(self.n, self.N, self.nu0, self.seed)
        if not (self.b_tau > self.a_tau >= 0):
            raise ConfigError("size support must satisfy b_tau > a_tau >= 0")
        if self.sigma <= 0:
            raise ConfigError("shape scale sigma must be positive")


@dataclass(frozen=True)
class MonotoneSimConfig:
    """Monotone-data design: range ~ U(a_rho, b_rho), minimum ~ U(a_lambda,
    b_lambda), truncated normal CDF shape."""

    n: int
    N: int
    a_rho: float = 0.0
    b_rho: float = 4.0
    a_lambda: float = -2.0
    b_lambda: float = 2.0
    a_mu: float = 0.0
    b_mu: float = 1.0
    sigma: float = 1.0
    nu0: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _validate_common(self.n, self.N, self.nu0, self.seed)
        if not (self.b_rho > self.a_rho >= 0):
            raise ConfigError("range support must satisfy b_rho > a_rho >= 0")
        if self.b_lambda < self.a_lambda:
            raise ConfigError("minimum support must satisfy b_lambda >= a_lambda")
        if self.sigma <= 0:
            raise ConfigError("shape scale sigma must be positive")


@dataclass(frozen=True)
class RegressionSimConfig:
    """Regression design: covariate-dependent shape center/scale and sizes.

    Shape center mu(x) = a1 + b1 x + c1 x^2 + eps1 and scale
    sigma(x) = a2 + b2 x + c2 x^2 + eps2, with eps1/eps2 truncated normal
    (0, sigma0^2) on [l1, u1] / [l2, u2]. Sizes are b3 x + eps3 (positive), or
    minimum b3 x + eps3 and range b4 x + eps4 (monotone), with eps3/eps4
    following the eps2 law. The covariate is U(x_low, x_high) or truncated
    normal (mu_x, sigma_x) on that support.
    """

    n: int
    N: int
    a1: float = 0.1
    b1: float = 0.3
    c1: float = 0.0
    a2: float = 0.1
    b2: float = 0.1
    c2: float = 0.0
    b3: float = 0.5
    b4: float = 0.25
    sigma0: float = 0.5
    l1: float = -0.1
    u1: float = 0.1
    l2: float = -0.01
    u2: float = 0.01
    covariate_law: str = "uniform"
    x_low: float = 0.0
    x_high: float = 2.0
    mu_x: float = 1.0
    sigma_x: float = 0.5
    nu0: float = 0.0
    seed: int = 0

    def __post_init__(self):
        _validate_common(self.n, self.N, self.nu0, self.seed)
        if self.covariate_law not in ("uniform", "truncnorm"):
            raise ConfigError(f"unknown covariate law {self.covariate_law!r}")
        if not (self.x_high > self.x_low):
            raise ConfigError("covariate support is empty")
        if self.l1 > self.u1 or self.l2 > self.u2:
            raise ConfigError("noise truncation bounds are inverted")
        if self.sigma0 < 0:
            raise ConfigError("component noise scale sigma0 must be nonnegative")
        # sigma(x) must stay positive under the worst-case noise draw
        worst = min(
            self._scale(x) + self.l2
            for x in (self.x_low, self.x_high, self._scale_vertex())
        )
        if worst <= 0:
            raise ConfigError("scale sigma(x) is not positive on the support")

    def _center(self, x: float) -> float:
        return self.a1 + self.b1 * x + self.c1 * x * x

    def _scale(self, x: float) -> float:
        return self.a2 + self.b2 * x + self.c2 * x * x

    def _scale_vertex(self) -> float:
        if self.c2 == 0:
            return self.x_low
        vertex = -self.b2 / (2.0 * self.c2)
        return min(max(vertex, self.x_low), self.x_high)

    @classmethod
    def global_design(cls, n: int, N: int, **kwargs) -> "RegressionSimConfig":
        """Linear coefficients with a uniform covariate."""
        return cls(n=n, N=N, **kwargs)

    @classmethod
    def local_design(cls, n: int, N: int, **kwargs) -> "RegressionSimConfig":
        """Quadratic coefficients with a truncated-normal covariate."""
        defaults = dict(c1=0.05, c2=0.01, covariate_law="truncnorm")
        defaults.update(kwargs)
        return cls(n=n, N=N, **defaults)


def _truncnorm_normalizer(mu: float, sigma: float, lo: float, hi: float) -> tuple:
    alpha = (lo - mu) / sigma
    beta = (hi - mu) / sigma
    z = float(ndtr(beta) - ndtr(alpha))
    if z < _MIN_NORMALIZER:
        raise UnderflowError(
            f"truncated normal mass on [{lo}, {hi}] underflowed for "
            f"mu={mu}, sigma={sigma}"
        )
    return alpha, beta, z


def truncnorm_density(
    mu: float, sigma: float, m: int = DEFAULT_SHAPE_POINTS
) -> DensityGrid:
    """Density of N(mu, sigma^2) truncated to [0, 1], renormalized so the
    grid trapezoid integral is exactly 1."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    _, _, z = _truncnorm_normalizer(mu, sigma, 0.0, 1.0)
    grid = unit_grid(m)
    vals = _phi((grid - mu) / sigma) / (sigma * z)
    return DensityGrid(vals / trapezoid_uniform(vals, 1.0 / (m - 1)))


def truncnorm_cdf(mu: float, sigma: float, m: int = DEFAULT_SHAPE_POINTS) -> CdfGrid:
    """CDF of N(mu, sigma^2) truncated to [0, 1]; exactly 0 and 1 at the ends."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    _truncnorm_normalizer(mu, sigma, 0.0, 1.0)
    grid = unit_grid(m)
    raw = ndtr((grid - mu) / sigma)
    return CdfGrid((raw - raw[0]) / (raw[-1] - raw[0]))


def _truncnorm_ppf(u, mu: float, sigma: float, lo: float, hi: float):
    """Inverse-CDF sampling transform for the truncated normal; a zero scale
    degenerates to the (clamped) center."""
    if sigma == 0:
        return np.clip(np.zeros_like(np.asarray(u, dtype=float)) + mu, lo, hi)
    alpha, beta, _ = _truncnorm_normalizer(mu, sigma, lo, hi)
    pa, pb = ndtr(alpha), ndtr(beta)
    return mu + sigma * ndtri(pa + np.asarray(u) * (pb - pa))


def _truncnorm_pdf_values(t: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    _, _, z = _truncnorm_normalizer(mu, sigma, 0.0, 1.0)
    return _phi((t - mu) / sigma) / (sigma * z)


def _truncnorm_cdf_values(t: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    alpha, _, z = _truncnorm_normalizer(mu, sigma, 0.0, 1.0)
    return (ndtr((t - mu) / sigma) - ndtr(alpha)) / z


def _subject_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    )


def _observation_times(rng: np.random.Generator, num_obs: int, kind: str) -> TimeGrid:
    if kind == "equidistant":
        return TimeGrid((np.arange(num_obs) + 0.5) / num_obs)
    if kind == "exponential":
        # exponential gaps normalized into (0, 1); supports irregular-grid use
        gaps = rng.exponential(1.0, num_obs + 1)
        return TimeGrid(np.cumsum(gaps[:-1]) / gaps.sum())
    raise ConfigError(f"unknown time grid kind {kind!r}")


def _subject_id(i: int) -> str:
    return f"s{i:05d}"


def generate_positive(
    cfg: PositiveSimConfig,
    m: int = DEFAULT_SHAPE_POINTS,
    time_grid: str = "equidistant",
) -> tuple[LongitudinalDataset, list[PositiveDecomposition]]:
    """Simulate positive trajectories Y = size * shape observed with noise.

    Returns the noisy dataset together with the true decompositions (shape
    truths are evaluated on the shared ``m``-point grid).
    """
    subjects = []
    truths = []
    for i in range(cfg.n):
        rng = _subject_rng(cfg.seed, i)
        tau = rng.uniform(cfg.a_tau, cfg.b_tau)
        mu = rng.uniform(cfg.a_mu, cfg.b_mu)
        times = _observation_times(rng, cfg.N, time_grid)
        y = tau * _truncnorm_pdf_values(times.points, mu, cfg.sigma)
        z = y + cfg.nu0 * rng.standard_normal(cfg.N)
        subjects.append((_subject_id(i), RawObservations(times, z)))
        truths.append(PositiveDecomposition(tau, truncnorm_density(mu, cfg.sigma, m)))
    return LongitudinalDataset(tuple(subjects)), truths


def generate_monotone(
    cfg: MonotoneSimConfig,
    m: int = DEFAULT_SHAPE_POINTS,
    time_grid: str = "equidistant",
) -> tuple[LongitudinalDataset, list[MonotoneDecomposition]]:
    """Simulate monotone trajectories Y = minimum + range * shape."""
    subjects = []
    truths = []
    for i in range(cfg.n):
        rng = _subject_rng(cfg.seed, i)
        rho = rng.uniform(cfg.a_rho, cfg.b_rho)
        lam = rng.uniform(cfg.a_lambda, cfg.b_lambda)
        mu = rng.uniform(cfg.a_mu, cfg.b_mu)
        times = _observation_times(rng, cfg.N, time_grid)
        y = rho * _truncnorm_cdf_values(times.points, mu, cfg.sigma) + lam
        z = y + cfg.nu0 * rng.standard_normal(cfg.N)
        subjects.append((_subject_id(i), RawObservations(times, z)))
        truths.append(
            MonotoneDecomposition(rho, lam, truncnorm_cdf(mu, cfg.sigma, m))
        )
    return LongitudinalDataset(tuple(subjects)), truths


def regression_oracle(cfg: RegressionSimConfig, kind: str, m: int = DEFAULT_SHAPE_POINTS):
    """Noise-free conditional decomposition as a function of the predictor."""
    if kind == "positive":

        def oracle(x: float) -> PositiveDecomposition:
            return PositiveDecomposition(
                max(cfg.b3 * x, SIZE_FLOOR),
                truncnorm_density(cfg._center(x), cfg._scale(x), m),
            )

    elif kind == "monotone":

        def oracle(x: float) -> MonotoneDecomposition:
            return MonotoneDecomposition(
                max(cfg.b4 * x, RANGE_FLOOR),
                cfg.b3 * x,
                truncnorm_cdf(cfg._center(x), cfg._scale(x), m),
            )

    else:
        raise ConfigError(f"unknown kind {kind!r}")
    return oracle


def generate_regression(
    cfg: RegressionSimConfig,
    kind: str,
    m: int = DEFAULT_SHAPE_POINTS,
) -> tuple[LongitudinalDataset, CovariateMatrix, object]:
    """Simulate covariate-dependent trajectories for Fréchet regression.

    Returns the noisy dataset (carrying the covariates), the covariate
    matrix aligned to subject order, and the noise-free oracle mapping a
    predictor value to the conditional decomposition. Sizes are floored at
    the stability constants so every truth satisfies its constraint.
    """
    if kind not in ("positive", "monotone"):
        raise ConfigError(f"unknown kind {kind!r}")
    subjects = []
    covariates = {}
    xs = np.empty(cfg.n)
    times = TimeGrid((np.arange(cfg.N) + 0.5) / cfg.N)
    for i in range(cfg.n):
        rng = _subject_rng(cfg.seed, i)
        if cfg.covariate_law == "uniform":
            x = rng.uniform(cfg.x_low, cfg.x_high)
        else:
            x = float(
                _truncnorm_ppf(rng.uniform(), cfg.mu_x, cfg.sigma_x,
                               cfg.x_low, cfg.x_high)
            )
        eps1 = float(_truncnorm_ppf(rng.uniform(), 0.0, cfg.sigma0, cfg.l1, cfg.u1))
        eps2 = float(_truncnorm_ppf(rng.uniform(), 0.0, cfg.sigma0, cfg.l2, cfg.u2))
        eps3 = float(_truncnorm_ppf(rng.uniform(), 0.0, cfg.sigma0, cfg.l2, cfg.u2))
        center = cfg._center(x) + eps1
        scale = cfg._scale(x) + eps2
        if kind == "positive":
            tau = max(cfg.b3 * x + eps3, SIZE_FLOOR)
            y = tau * _truncnorm_pdf_values(times.points, center, scale)
        else:
            eps4 = float(
                _truncnorm_ppf(rng.uniform(), 0.0, cfg.sigma0, cfg.l2, cfg.u2)
            )
            lam = cfg.b3 * x + eps3
            rho = max(cfg.b4 * x + eps4, RANGE_FLOOR)
            y = rho * _truncnorm_cdf_values(times.points, center, scale) + lam
        z = y + cfg.nu0 * rng.standard_normal(cfg.N)
        sid = _subject_id(i)
        subjects.append((sid, RawObservations(times, z)))
        covariates[sid] = (x,)
        xs[i] = x
    dataset = LongitudinalDataset(tuple(subjects), covariates)
    return dataset, CovariateMatrix(xs), regression_oracle(cfg, kind, m)


_CONFIG_TYPES = {
    "positive": PositiveSimConfig,
    "monotone": MonotoneSimConfig,
    "regression": RegressionSimConfig,
}

_INT_FIELDS = {"n", "N", "seed"}


def read_key_value_file(path) -> dict:
    """Parse a plain-text config of ``key=value`` lines; '#' starts a comment."""
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in stripped.split("=", 1))
            mapping[key] = value
    return mapping


def config_from_mapping(kind: str, mapping: dict):
    """Build a simulation config of the given kind from string key=values.

    The documented key list is exactly the config dataclass fields.
    """
    if kind not in _CONFIG_TYPES:
        raise ConfigError(f"unknown config kind {kind!r}")
    cls = _CONFIG_TYPES[kind]
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise ConfigError(f"unknown config keys for {kind}: {unknown}")
    kwargs = {}
    for key, value in mapping.items():
        if key in _INT_FIELDS:
            kwargs[key] = int(value)
        elif key == "covariate_law":
            kwargs[key] = str(value)
        else:
            try:
                kwargs[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"config key {key}={value!r} is not numeric") from exc
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, kind: str):
    """Read a key=value config file into the config type for ``kind``."""
    return config_from_mapping(kind, read_key_value_file(path))


def population_mean_positive(
    cfg: PositiveSimConfig, m: int = DEFAULT_SHAPE_POINTS, quad_points: int = 401
):
    """Population Fréchet mean of the positive design.

    Size is the closed-form mean of the uniform law; the shape quantile is
    the population average of truncated-normal quantile functions over the
    center's uniform law, computed by fixed trapezoid quadrature.
    """
    size = 0.5 * (cfg.a_tau + cfg.b_tau)
    qbar = _population_quantile_mean(cfg.a_mu, cfg.b_mu, cfg.sigma, m, quad_points)
    return size, QuantileGrid(qbar)


def population_mean_monotone(
    cfg: MonotoneSimConfig, m: int = DEFAULT_SHAPE_POINTS, quad_points: int = 401
):
    """Population Fréchet mean components of the monotone design."""
    rho = 0.5 * (cfg.a_rho + cfg.b_rho)
    lam = 0.5 * (cfg.a_lambda + cfg.b_lambda)
    qbar = _population_quantile_mean(cfg.a_mu, cfg.b_mu, cfg.sigma, m, quad_points)
    return rho, lam, QuantileGrid(qbar)


def _population_quantile_mean(
    a_mu: float, b_mu: float, sigma: float, m: int, quad_points: int
) -> np.ndarray:
    mus = np.linspace(a_mu, b_mu, quad_points)
    levels = unit_grid(m)
    acc = np.zeros(m)
    weights = np.full(quad_points, 1.0)
    weights[0] = weights[-1] = 0.5
    for mu, w in zip(mus, weights):
        acc += w * np.clip(_truncnorm_ppf(levels, mu, sigma, 0.0, 1.0), 0.0, 1.0)
    return acc / weights.sum()

"""Monte-Carlo experiment harness: RMSE tables over (N, noise) cells,
relative RMSE against the transformation baselines, empirical convergence-rate
checks, and regression oracle comparisons.

Every replicate runs on its own RNG stream keyed by (master seed, replicate
index) and results are aggregated in replicate order, so reports are
bit-identical for a fixed seed regardless of how many worker processes run
the replicates.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from . import quantile
from .baseline import baseline_mean_monotone, baseline_mean_positive
from .core import (
    Constraint,
    DEFAULT_SHAPE_POINTS,
    MonotoneDecomposition,
    PositiveDecomposition,
    SampledTrajectory,
    TimeGrid,
    l2_distance,
    metric_monotone,
    metric_positive,
)
from .decomp import (
    POSITIVITY_FLOOR,
    SIZE_FLOOR,
    _positive_shape,
    decompose_monotone_estimated,
    decompose_positive_estimated,
    recompose_monotone,
    recompose_positive,
)
from .errors import ConfigError, DomainError
from .recovery import BinSpec, default_bin_width, recover_trajectory
from .regress import (
    CovariateMatrix,
    KernelSpec,
    default_bandwidth,
    fit_monotone_regression,
    fit_positive_regression,
)
from .simgen import (
    MonotoneSimConfig,
    PositiveSimConfig,
    RegressionSimConfig,
    generate_monotone,
    generate_positive,
    generate_regression,
    population_mean_monotone,
    population_mean_positive,
)

KINDS = ("positive", "monotone")


def replicate_seed(master_seed: int, index: int) -> int:
    """Deterministic per-replicate seed keyed by the replicate index."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_tasks(fn, args_list, workers: int):
    if workers <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class RmseCell:
    N: int
    nu0: float
    stats: dict  # metric name -> (mean over replicates, sd over replicates)


@dataclass(frozen=True, eq=False)
class RmseReport:
    kind: str
    B: int
    seed: int
    cells: tuple

    def cell(self, N: int, nu0: float) -> RmseCell:
        for c in self.cells:
            if c.N == N and c.nu0 == nu0:
                return c
        raise KeyError((N, nu0))

    def csv_rows(self):
        yield ["kind", "N", "nu0", "metric", "mean", "sd", "B", "seed"]
        for c in self.cells:
            for metric, (mean, sd) in c.stats.items():
                yield [self.kind, repr(c.N), repr(c.nu0), metric,
                       repr(mean), repr(sd), repr(self.B), repr(self.seed)]


def rmse_single_replicate(cfg, kind: str) -> dict:
    """Estimate one simulated sample and return its component RMSEs.

    Uses exactly the product-metric pieces: the trajectory RMSE combines the
    squared Euclidean size error and squared Wasserstein shape error per
    subject.
    """
    _check_kind(kind)
    bins = BinSpec(default_bin_width(cfg.n, cfg.N))
    size_sq = np.empty(cfg.n)
    shape_sq = np.empty(cfg.n)
    if kind == "positive":
        data, truths = generate_positive(cfg)
        for i, (_, obs) in enumerate(data.subjects):
            est = decompose_positive_estimated(obs, bins, size_floor=SIZE_FLOOR)
            truth = truths[i]
            size_sq[i] = (est.size - truth.size) ** 2
            shape_sq[i] = quantile.wasserstein(
                quantile.quantile_from_density(est.shape),
                quantile.quantile_from_density(truth.shape),
            ) ** 2
    else:
        data, truths = generate_monotone(cfg)
        for i, (_, obs) in enumerate(data.subjects):
            est = decompose_monotone_estimated(obs, bins)
            truth = truths[i]
            size_sq[i] = (est.range - truth.range) ** 2 + (
                est.minimum - truth.minimum
            ) ** 2
            shape_sq[i] = quantile.wasserstein(
                quantile.quantile_from_cdf(est.shape),
                quantile.quantile_from_cdf(truth.shape),
            ) ** 2
    return {
        "Y": float(np.sqrt((size_sq + shape_sq).mean())),
        "size": float(np.sqrt(size_sq.mean())),
        "shape": float(np.sqrt(shape_sq.mean())),
    }


def _rmse_task(cfg, kind):
    return rmse_single_replicate(cfg, kind)


def _aggregate(values_per_replicate, metrics) -> dict:
    stats = {}
    for metric in metrics:
        arr = np.array([v[metric] for v in values_per_replicate])
        good = arr[~np.isnan(arr)]
        if good.size == 0:
            stats[metric] = (math.nan, math.nan)
        else:
            sd = float(good.std(ddof=1)) if good.size > 1 else 0.0
            stats[metric] = (float(good.mean()), sd)
    return stats


def _sweep_cells(cfg, Ns, nu0s):
    Ns = [cfg.N] if Ns is None else [int(v) for v in Ns]
    nu0s = [cfg.nu0] if nu0s is None else [float(v) for v in nu0s]
    return list(product(Ns, nu0s))


def rmse_experiment(
    cfg, kind: str, B: int, Ns=None, nu0s=None, workers: int = 1
) -> RmseReport:
    """Mean/SD of component RMSEs over B replicates per (N, nu0) cell.

    Replicate seeds are shared across cells (common random numbers), which
    sharpens cross-cell comparisons.
    """
    if B < 2:
        raise ConfigError("need at least B=2 replicates")
    cells = _sweep_cells(cfg, Ns, nu0s)
    tasks = [
        (replace(cfg, N=N, nu0=nu0, seed=replicate_seed(cfg.seed, b)), kind)
        for (N, nu0) in cells
        for b in range(B)
    ]
    results = _run_tasks(_rmse_task, tasks, workers)
    out = []
    for j, (N, nu0) in enumerate(cells):
        chunk = results[j * B : (j + 1) * B]
        out.append(RmseCell(N, nu0, _aggregate(chunk, ("Y", "size", "shape"))))
    return RmseReport(kind, B, cfg.seed, tuple(out))


def _population_trajectory(cfg, kind: str, m: int) -> SampledTrajectory:
    if kind == "positive":
        size, qbar = population_mean_positive(cfg, m)
        shape = _positive_shape(quantile.density_from_quantile(qbar).ordinates, m)
        return recompose_positive(PositiveDecomposition(size, shape))
    rho, lam, qbar = population_mean_monotone(cfg, m)
    return recompose_monotone(
        MonotoneDecomposition(rho, lam, quantile.cdf_from_quantile(qbar))
    )


def decomposition_mean_estimator(dataset, bins: BinSpec, kind: str, m: int):
    """Fréchet-mean trajectory through the size-shape decomposition."""
    from .decomp import frechet_mean_monotone, frechet_mean_positive

    if kind == "positive":
        ests = [
            decompose_positive_estimated(obs, bins, m, size_floor=SIZE_FLOOR)
            for _, obs in dataset.subjects
        ]
        return frechet_mean_positive(ests)[1]
    ests = [
        decompose_monotone_estimated(obs, bins, m) for _, obs in dataset.subjects
    ]
    return frechet_mean_monotone(ests)[1]


def baseline_mean_estimator(dataset, bins: BinSpec, kind: str, m: int):
    """Transformation-approach mean on the bin-recovered trajectories.

    Raw recovery need not satisfy the constraints the baseline requires, so
    positive recoveries are clamped at the positivity floor and monotone ones
    are isotonized and epsilon-strictified first.
    """
    grid = TimeGrid.uniform(m)
    trajs = []
    for _, obs in dataset.subjects:
        rec = recover_trajectory(obs, bins, grid)
        if kind == "positive":
            vals = np.clip(rec.values, POSITIVITY_FLOOR, None)
            trajs.append(SampledTrajectory(grid, vals, Constraint.POSITIVE))
        else:
            vals = quantile.isotonic(rec.values)
            vals = vals + np.linspace(0.0, 1e-9, m)  # break flat ties
            trajs.append(SampledTrajectory(grid, vals, Constraint.MONOTONE))
    if kind == "positive":
        return baseline_mean_positive(trajs)
    return baseline_mean_monotone(trajs)


def _relative_task(cfg, kind, estimators, m, truth):
    if kind == "positive":
        data, _ = generate_positive(cfg, m)
    else:
        data, _ = generate_monotone(cfg, m)
    bins = BinSpec(default_bin_width(cfg.n, cfg.N))
    method, competitor = estimators
    num = l2_distance(truth, method(data, bins, kind, m))
    den = l2_distance(truth, competitor(data, bins, kind, m))
    if den == 0:
        return {"ratio": math.nan}
    return {"ratio": num / den}


def relative_rmse_experiment(
    cfg,
    kind: str,
    B: int,
    Ns=None,
    nu0s=None,
    workers: int = 1,
    estimators=None,
    m: int = DEFAULT_SHAPE_POINTS,
) -> RmseReport:
    """Per-cell mean/SD of the L2-error ratio: decomposition-based Fréchet
    mean over the transformation baseline, both against the population mean.

    ``estimators`` may inject two alternative mean estimators (callables of
    dataset, bins, kind, m) — used for testing the harness itself.
    """
    _check_kind(kind)
    if B < 2:
        raise ConfigError("need at least B=2 replicates")
    if estimators is None:
        estimators = (decomposition_mean_estimator, baseline_mean_estimator)
    cells = _sweep_cells(cfg, Ns, nu0s)
    truth = _population_trajectory(cfg, kind, m)  # independent of (N, nu0)
    tasks = [
        (
            replace(cfg, N=N, nu0=nu0, seed=replicate_seed(cfg.seed, b)),
            kind,
            estimators,
            m,
            truth,
        )
        for (N, nu0) in cells
        for b in range(B)
    ]
    results = _run_tasks(_relative_task, tasks, workers)
    out = []
    for j, (N, nu0) in enumerate(cells):
        chunk = results[j * B : (j + 1) * B]
        out.append(RmseCell(N, nu0, _aggregate(chunk, ("ratio",))))
    return RmseReport(kind, B, cfg.seed, tuple(out))


@dataclass(frozen=True, eq=False)
class RateReport:
    n: int
    nu0: float
    B: int
    seed: int
    recovery: tuple          # (N, mean sup-error) pairs
    recovery_slope: float
    recovery_ci_halfwidth: float
    size: tuple              # (N, mean absolute size error) pairs
    size_slope: float
    size_ci_halfwidth: float

    def csv_rows(self, which: str = "recovery"):
        pairs, slope = {
            "recovery": (self.recovery, self.recovery_slope),
            "size": (self.size, self.size_slope),
        }[which]
        yield ["N", "sup_error", "slope"]
        for N, err in pairs:
            yield [repr(N), repr(err), repr(slope)]


def _ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = (xc * xc).sum()
    slope = float((xc * y).sum() / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = len(x) - 2
    if dof <= 0:
        return slope, math.nan
    se = math.sqrt((resid * resid).sum() / dof / sxx)
    return slope, 1.96 * se


def _rate_task(cfg, m):
    data, truths = generate_positive(cfg, m)
    bins = BinSpec(default_bin_width(cfg.n, cfg.N))
    grid = TimeGrid.uniform(m)
    sup_err = 0.0
    size_err = 0.0
    for i, (_, obs) in enumerate(data.subjects):
        rec = recover_trajectory(obs, bins, grid)
        truth_traj = recompose_positive(truths[i], grid)
        sup_err = max(sup_err, float(np.abs(rec.values - truth_traj.values).max()))
        size_err += abs(float(obs.values.mean()) - truths[i].size)
    return sup_err, size_err / cfg.n


def rate_check(
    n: int,
    Ns,
    nu0: float,
    B: int,
    seed: int = 0,
    workers: int = 1,
    m: int = DEFAULT_SHAPE_POINTS,
) -> RateReport:
    """Empirical convergence-rate check for trajectory recovery and the size
    estimator.

    The mean (over replicates) sup-error of the recovered trajectories is
    regressed on log(N / log n); the mean absolute size error is regressed on
    log N. With zero noise the recovery error is bin-bias dominated, which the
    report reflects but does not assert on.
    """
    Ns = sorted(int(v) for v in Ns)
    if len(set(Ns)) < 4:
        raise ConfigError("need at least 4 distinct N values")
    if max(Ns) < 100 * min(Ns):
        raise ConfigError("N values must span at least two decades")
    tasks = [
        (PositiveSimConfig(n=n, N=N, nu0=nu0, seed=replicate_seed(seed, b)), m)
        for N in Ns
        for b in range(B)
    ]
    results = _run_tasks(_rate_task, tasks, workers)
    sup_means = []
    size_means = []
    for j in range(len(Ns)):
        chunk = results[j * B : (j + 1) * B]
        sup_means.append(float(np.mean([r[0] for r in chunk])))
        size_means.append(float(np.mean([r[1] for r in chunk])))
    log_ratio = np.log(np.array(Ns, dtype=float) / math.log(n))
    rec_slope, rec_ci = _ols_slope(log_ratio, np.log(sup_means))
    size_slope, size_ci = _ols_slope(np.log(Ns), np.log(size_means))
    return RateReport(
        n=n,
        nu0=nu0,
        B=B,
        seed=seed,
        recovery=tuple(zip(Ns, sup_means)),
        recovery_slope=rec_slope,
        recovery_ci_halfwidth=rec_ci,
        size=tuple(zip(Ns, size_means)),
        size_slope=size_slope,
        size_ci_halfwidth=size_ci,
    )


@dataclass(frozen=True, eq=False)
class RegressionComparison:
    kind: str
    mode: str
    seed: int
    rows: tuple  # (x, shape_error, size_error, trajectory_error)

    def mean_shape_error(self) -> float:
        return float(np.mean([r[1] for r in self.rows]))

    def mean_size_error(self) -> float:
        return float(np.mean([r[2] for r in self.rows]))

    def csv_rows(self):
        yield ["x", "shape_error", "size_error", "trajectory_error"]
        for x, dsh, dsz, dtr in self.rows:
            yield [repr(x), repr(dsh), repr(dsz), repr(dtr)]


def regression_comparison(
    cfg: RegressionSimConfig,
    kind: str,
    x_grid,
    mode: str = "global",
    bandwidth: float | None = None,
    m: int = DEFAULT_SHAPE_POINTS,
    bins: BinSpec | None = None,
) -> RegressionComparison:
    """Distance between the fitted conditional decomposition and the
    noise-free oracle over a grid of predictor values.

    ``bins`` defaults to the noisy-data rule of thumb; noiseless designs
    support (and benefit from) finer bins, since only bias remains.
    """
    _check_kind(kind)
    x_grid = [float(x) for x in x_grid]
    for x in x_grid:
        if not (cfg.x_low < x < cfg.x_high):
            raise DomainError(
                f"x={x} is not interior to the covariate support "
                f"({cfg.x_low}, {cfg.x_high})"
            )
    data, X, oracle = generate_regression(cfg, kind, m)
    if bins is None:
        bins = BinSpec(default_bin_width(cfg.n, cfg.N))
    kernel = None
    if mode == "local":
        kernel = KernelSpec(bandwidth=bandwidth or default_bandwidth(X))
    rows = []
    if kind == "positive":
        ests = [
            decompose_positive_estimated(obs, bins, m, size_floor=SIZE_FLOOR)
            for _, obs in data.subjects
        ]
        for x in x_grid:
            fit, _ = fit_positive_regression(ests, X, x, mode=mode, kernel=kernel)
            target = oracle(x)
            d_shape = quantile.wasserstein(
                quantile.quantile_from_density(target.shape),
                quantile.quantile_from_density(fit.shape),
            )
            d_size = abs(target.size - fit.size)
            rows.append((x, d_shape, d_size, metric_positive(target, fit)))
    else:
        ests = [
            decompose_monotone_estimated(obs, bins, m) for _, obs in data.subjects
        ]
        for x in x_grid:
            fit, _ = fit_monotone_regression(ests, X, x, mode=mode, kernel=kernel)
            target = oracle(x)
            d_shape = quantile.wasserstein(
                quantile.quantile_from_cdf(target.shape),
                quantile.quantile_from_cdf(fit.shape),
            )
            d_size = math.hypot(
                target.range - fit.range, target.minimum - fit.minimum
            )
            rows.append((x, d_shape, d_size, metric_monotone(target, fit)))
    return RegressionComparison(kind, mode, cfg.seed, tuple(rows))


def write_csv(rows, path) -> None:
    """Write an iterable of row lists to ``path`` as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(row)

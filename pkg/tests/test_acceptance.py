"""Acceptance suite: one test per criterion, each printing a pass line with
the measured quantities (run with ``pytest -s`` to see them live).

Criteria 1-2 run the full desk-scale Monte-Carlo sweeps and dominate the
runtime; everything else is seconds. Replicates run on a small process pool
where available — results are bit-identical for any worker count (criterion
10 verifies exactly that).
"""

import itertools
import math
import os
import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from sizeshape import bench, cli, simgen
from sizeshape.core import (
    CdfGrid,
    Constraint,
    DensityGrid,
    MonotoneDecomposition,
    PositiveDecomposition,
    QuantileGrid,
    SampledTrajectory,
    TimeGrid,
    unit_grid,
)
from sizeshape.decomp import (
    decompose_monotone_exact,
    decompose_positive_exact,
    frechet_mean_monotone,
    frechet_mean_positive,
    recompose_monotone,
    recompose_positive,
)
from sizeshape.quantile import (
    project_to_unit_monotone,
    quantile_from_cdf,
    quantile_from_density,
    wasserstein,
)
from sizeshape.recovery import BinSpec
from sizeshape.regress import CovariateMatrix, KernelSpec, global_weights, local_weights
from conftest import interval_density, uniform_density, wasserstein_by_cdf_inversion

WORKERS = min(4, os.cpu_count() or 1)


def report(num, message):
    print(f"\nACCEPTANCE CRITERION {num}: PASS - {message}", flush=True)


# --------------------------------------------------------------------------
# criterion 5: projection oracle


def test_criterion_05_projection_equals_brute_force_qp():
    import cvxpy as cp

    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 13))
        raw = rng.uniform(-0.5, 1.5, n)
        v = cp.Variable(n)
        constraints = [v >= 0, v <= 1]
        if n > 1:
            constraints.append(v[1:] >= v[:-1])
        problem = cp.Problem(cp.Minimize(cp.sum_squares(v - raw)), constraints)
        problem.solve(solver="OSQP", eps_abs=1e-12, eps_rel=1e-12,
                      max_iter=200000, polishing=True)
        worst = max(worst, float(np.abs(project_to_unit_monotone(raw) - v.value).max()))
    assert worst <= 1e-8
    report(5, f"clip-PAVA vs QP on 200 vectors, max deviation {worst:.2e} <= 1e-8")


# --------------------------------------------------------------------------
# criterion 6: Wasserstein closed forms


def test_criterion_06_wasserstein_closed_forms():
    m = 1000
    q_full = quantile_from_density(uniform_density(m))
    q_lo = quantile_from_density(interval_density(m, 0.0, 0.5))
    q_hi = quantile_from_density(interval_density(m, 0.5, 1.0))

    d1 = wasserstein(q_full, q_lo)
    d2 = wasserstein(q_lo, q_hi)
    assert abs(d1 - 1.0 / math.sqrt(12.0)) <= 1e-3
    assert abs(d2 - 0.5) <= 1e-3

    o1 = wasserstein_by_cdf_inversion(uniform_density(m), interval_density(m, 0, 0.5))
    o2 = wasserstein_by_cdf_inversion(
        interval_density(m, 0, 0.5), interval_density(m, 0.5, 1.0)
    )
    assert abs(d1 - o1) <= 1e-3
    assert abs(d2 - o2) <= 1e-3
    report(6, f"d_W values {d1:.6f} (1/sqrt12) and {d2:.6f} (0.5), oracle agreement <= 1e-3")


# --------------------------------------------------------------------------
# criterion 7: weight identities


def test_criterion_07_weight_identities():
    rng = np.random.default_rng(707)
    worst_global = 0.0
    for _ in range(100):
        n = int(rng.integers(6, 60))
        p = int(rng.integers(1, 4))
        X = CovariateMatrix(rng.normal(0.0, 1.5, (n, p)))
        x = rng.normal(0.0, 1.5, p)
        s = global_weights(X, x)
        xbar = X.rows.mean(axis=0)
        worst_global = max(
            worst_global,
            abs(s.mean() - 1.0),
            float(np.abs((s[:, None] * (X.rows - xbar)).mean(axis=0) - (x - xbar)).max()),
        )
    assert worst_global <= 1e-10

    worst_local = 0.0
    done = 0
    while done < 100:
        n = int(rng.integers(10, 60))
        X = CovariateMatrix(rng.uniform(0.0, 2.0, n))
        x = float(rng.uniform(0.3, 1.7))
        kernel = KernelSpec(bandwidth=float(rng.uniform(0.2, 1.0)))
        window = np.abs(X.rows[:, 0] - x) < kernel.bandwidth
        if window.sum() < 2:
            continue  # degenerate neighborhood: precondition violated
        done += 1
        s = local_weights(X, x, kernel)
        worst_local = max(
            worst_local,
            abs(s.mean() - 1.0),
            abs(float((s * (X.rows[:, 0] - x)).mean())),
        )
    assert worst_local <= 1e-10
    report(7, f"100 designs each: global dev {worst_global:.2e}, "
              f"local dev {worst_local:.2e} (<= 1e-10)")


# --------------------------------------------------------------------------
# criterion 8: Fréchet-mean minimality against dense grid search
#
# Instances are chosen so every quantile/CDF involved is exactly piecewise
# linear with knots on the M=5 grid; otherwise the density<->quantile round
# trip at this resolution carries O(grid step) error and a 1e-6 comparison
# would be meaningless. The true optimal shapes lie on the search lattices,
# so the comparison is two-sided at 1e-6.


def _positive_functional(ds, size0, q0):
    qs = [quantile_from_density(d.shape) for d in ds]
    step = 1.0 / (len(q0) - 1)
    total = 0.0
    for d, q in zip(ds, qs):
        diff2 = (q.ordinates - q0) ** 2
        shape_term = step * (diff2.sum() - 0.5 * (diff2[0] + diff2[-1]))
        total += (d.size - size0) ** 2 + shape_term
    return total / len(ds)


def _monotone_functional(ds, rho0, lam0, q0):
    qs = [quantile_from_cdf(d.shape) for d in ds]
    step = 1.0 / (len(q0) - 1)
    total = 0.0
    for d, q in zip(ds, qs):
        diff2 = (q.ordinates - q0) ** 2
        shape_term = step * (diff2.sum() - 0.5 * (diff2[0] + diff2[-1]))
        total += (d.range - rho0) ** 2 + (d.minimum - lam0) ** 2 + shape_term
    return total / len(ds)


def _monotone_lattice(levels, m):
    for cand in itertools.combinations_with_replacement(levels, m):
        yield np.array(cand)


def test_criterion_08_frechet_mean_minimality():
    m = 5

    # positive instance: shapes share the uniform density (quantile p is on
    # the lattice); sizes differ
    ds = [PositiveDecomposition(s, uniform_density(m)) for s in (1.0, 2.0, 2.5)]
    mean, _ = frechet_mean_positive(ds)
    v_returned = _positive_functional(
        ds, mean.size, quantile_from_density(mean.shape).ordinates
    )
    taus = np.linspace(0.0, 4.0, 2001)
    size_best = min(_positive_functional(ds, t, unit_grid(m)) for t in [0.0])
    # joint search: the functional is a sum A(size) + B(shape), evaluated on
    # the full product grid via the outer sum
    A = np.array([np.mean([(d.size - t) ** 2 for d in ds]) for t in taus])
    levels = np.linspace(0.0, 1.0, 21)
    B = []
    qs = [quantile_from_density(d.shape).ordinates for d in ds]
    step = 1.0 / (m - 1)
    for cand in _monotone_lattice(levels, m):
        term = 0.0
        for q in qs:
            diff2 = (q - cand) ** 2
            term += step * (diff2.sum() - 0.5 * (diff2[0] + diff2[-1]))
        B.append(term / len(qs))
    v_grid = float(np.add.outer(A, np.array(B)).min())
    assert v_returned <= v_grid + 1e-6
    assert v_grid - v_returned <= 1e-6  # optimum lies on the lattice
    gap_pos = v_grid - v_returned

    # monotone instance: affine quantiles b*p with b in {0.5, 0.75, 1.0};
    # knots and the optimal mean 0.75 p are exactly on the 1/16 lattice
    t5 = unit_grid(m)
    shapes = [
        CdfGrid(np.clip(t5 / b, 0.0, 1.0)) for b in (0.5, 0.75, 1.0)
    ]
    mds = [
        MonotoneDecomposition(r, l, s)
        for (r, l), s in zip([(1.0, 0.0), (2.0, -1.0), (2.5, 0.5)], shapes)
    ]
    mmean, _ = frechet_mean_monotone(mds)
    v_m_returned = _monotone_functional(
        mds, mmean.range, mmean.minimum,
        quantile_from_cdf(mmean.shape).ordinates,
    )
    rhos = np.linspace(1.0, 3.0, 2001)
    lams = np.linspace(-1.0, 1.0, 2001)
    A_rho = np.array([np.mean([(d.range - r) ** 2 for d in mds]) for r in rhos])
    A_lam = np.array([np.mean([(d.minimum - l) ** 2 for d in mds]) for l in lams])
    levels16 = np.linspace(0.0, 1.0, 17)
    qs_m = [quantile_from_cdf(d.shape).ordinates for d in mds]
    B_m = []
    for cand in _monotone_lattice(levels16, m):
        term = 0.0
        for q in qs_m:
            diff2 = (q - cand) ** 2
            term += step * (diff2.sum() - 0.5 * (diff2[0] + diff2[-1]))
        B_m.append(term / len(qs_m))
    # the functional splits as A_rho + A_lam + B; the product-grid minimum is
    # the sum of the axis minima
    v_m_grid = float(A_rho.min() + A_lam.min() + min(B_m))
    assert v_m_returned <= v_m_grid + 1e-6
    assert v_m_grid - v_m_returned <= 1e-6
    report(8, f"positive gap {gap_pos:.2e}, monotone gap "
              f"{v_m_grid - v_m_returned:.2e} (|gap| <= 1e-6)")


# --------------------------------------------------------------------------
# criterion 9: round trips


def test_criterion_09_round_trips(tmp_path, rng):
    m = 1001
    t = unit_grid(m)
    worst = 0.0
    for k in range(5):
        vals = 1.5 + 0.8 * np.sin(2 * np.pi * (k + 1) * t + k) + 0.1 * k
        y = SampledTrajectory(TimeGrid.uniform(m), vals, Constraint.POSITIVE)
        back = recompose_positive(decompose_positive_exact(y), y.grid)
        worst = max(worst, float(np.abs(back.values - y.values).max()))

        inc = np.cumsum(0.1 + rng.uniform(0.0, 1.0, m))
        ym = SampledTrajectory(TimeGrid.uniform(m), inc, Constraint.MONOTONE)
        backm = recompose_monotone(decompose_monotone_exact(ym), ym.grid)
        worst = max(worst, float(np.abs(backm.values - ym.values).max()))
    assert worst <= 1e-8

    cfg = simgen.PositiveSimConfig(n=5, N=40, nu0=0.1, seed=909)
    dataset, _ = simgen.generate_positive(cfg)
    path = tmp_path / "obs.csv"
    cli.write_longitudinal_csv(dataset, path)
    loaded = cli.load_longitudinal_csv(path)
    csv_worst = 0.0
    for sid in dataset.ids:
        a, b = dataset.observations(sid), loaded.observations(sid)
        csv_worst = max(
            csv_worst,
            float(np.abs(a.times.points - b.times.points).max()),
            float(np.abs(a.values - b.values).max()),
        )
    assert csv_worst <= 1e-12
    report(9, f"decompose/recompose sup error {worst:.2e} <= 1e-8; "
              f"CSV round trip {csv_worst:.2e} <= 1e-12")


# --------------------------------------------------------------------------
# criterion 10: bench determinism across runs and worker counts


def test_criterion_10_bench_determinism(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n=8\nN=60\nnu0=0.1\nseed=10\n")
    rcfg = tmp_path / "rcfg.txt"
    rcfg.write_text("n=20\nN=40\nseed=10\n")

    def run(args, out):
        assert cli.main([str(a) for a in args] + ["--out", str(out)]) == 0
        return out.read_bytes()

    checked = []
    for name, args in [
        ("rmse", ["rmse", "--constraint", "positive", "--config", cfg,
                  "--B", "2", "--Ns", "60", "120"]),
        ("relative-rmse", ["relative-rmse", "--constraint", "monotone",
                           "--config", cfg, "--B", "2"]),
        ("rate-check", ["rate-check", "--n", "4", "--Ns", "50", "100",
                        "1000", "5000", "--B", "2", "--seed", "7"]),
        ("regress-compare", ["regress-compare", "--constraint", "positive",
                             "--config", rcfg, "--x-grid", "0.8", "1.2", "3"]),
    ]:
        base = run(args, tmp_path / f"{name}_a.csv")
        rerun = run(args, tmp_path / f"{name}_b.csv")
        assert base == rerun, f"{name} not reproducible across runs"
        if name in ("rmse", "relative-rmse", "rate-check"):
            for w in ("2", "3"):
                multi = run(args + ["--workers", w], tmp_path / f"{name}_w{w}.csv")
                assert multi == base, f"{name} differs with workers={w}"
        checked.append(name)
    report(10, f"bit-identical outputs across runs and worker counts for "
               f"{', '.join(checked)}")


# --------------------------------------------------------------------------
# criterion 3: empirical convergence rates


def test_criterion_03_recovery_and_size_rates():
    r = bench.rate_check(
        n=50, Ns=[100, 1000, 10000, 100000], nu0=0.1, B=20, seed=303,
        workers=WORKERS,
    )
    assert -0.45 <= r.recovery_slope <= -0.20
    assert -0.65 <= r.size_slope <= -0.35
    report(3, f"recovery slope {r.recovery_slope:.3f} in [-0.45,-0.20]; "
              f"size slope {r.size_slope:.3f} in [-0.65,-0.35]")


# --------------------------------------------------------------------------
# criterion 4: regression oracle alignment
#
# Bin width fixed by pilot run: with no measurement noise only bin bias
# remains, and gamma=0.1 gives 50 observations per bin at N=500. The noisy
# -data rule of thumb (gamma=0.2 here) leaves the monotone step-CDF shape
# estimate with a structural d_W of about gamma/sqrt(12), outside tolerance.


def test_criterion_04_regression_oracle_alignment():
    x_grid = np.linspace(0.5, 1.5, 21)
    bins = BinSpec(0.1)

    cfg_pos = simgen.RegressionSimConfig.global_design(500, 500, seed=404)
    comp_pos = bench.regression_comparison(cfg_pos, "positive", x_grid, bins=bins)
    assert comp_pos.mean_shape_error() <= 0.05
    assert comp_pos.mean_size_error() <= 0.05

    cfg_mono = simgen.RegressionSimConfig.local_design(500, 500, seed=404)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        comp_mono = bench.regression_comparison(
            cfg_mono, "monotone", x_grid, bins=bins
        )
    assert comp_mono.mean_shape_error() <= 0.05
    assert comp_mono.mean_size_error() <= 0.05
    report(4, "mean d_W / size error: positive "
              f"{comp_pos.mean_shape_error():.4f} / {comp_pos.mean_size_error():.4f}, "
              f"monotone {comp_mono.mean_shape_error():.4f} / "
              f"{comp_mono.mean_size_error():.4f} (all <= 0.05)")


# --------------------------------------------------------------------------
# criterion 1: RMSE monotonicity in N and noise ordering


def test_criterion_01_rmse_monotonicity():
    start = time.time()
    details = []
    for kind, cfg in (
        ("positive", simgen.PositiveSimConfig(n=200, N=100, nu0=0.1, seed=101)),
        ("monotone", simgen.MonotoneSimConfig(n=200, N=100, nu0=0.1, seed=101)),
    ):
        sweep = bench.rmse_experiment(
            cfg, kind, B=50, Ns=[100, 200, 500, 1000], nu0s=[0.1],
            workers=WORKERS,
        )
        ys = [c.stats["Y"][0] for c in sweep.cells]
        assert all(a > b for a, b in zip(ys, ys[1:])), (kind, ys)

        noise = bench.rmse_experiment(
            cfg, kind, B=50, Ns=[500], nu0s=[0.05, 0.1, 0.15], workers=WORKERS,
        )
        levels = [c.stats["Y"][0] for c in noise.cells]
        assert levels[0] < levels[1] < levels[2], (kind, levels)
        details.append(f"{kind} RMSE_Y {['%.4f' % v for v in ys]}")
    elapsed = time.time() - start
    assert elapsed <= 300.0, f"desk-scale budget exceeded: {elapsed:.0f}s"
    report(1, f"strictly decreasing in N and ordered in noise for both kinds "
              f"({'; '.join(details)}; {elapsed:.0f}s <= 300s)")


# --------------------------------------------------------------------------
# criterion 2: relative RMSE against the transformation baseline


def test_criterion_02_relative_rmse():
    details = []
    for kind, cfg in (
        ("positive", simgen.PositiveSimConfig(n=500, N=100, nu0=0.1, seed=202)),
        ("monotone", simgen.MonotoneSimConfig(n=500, N=100, nu0=0.1, seed=202)),
    ):
        rep = bench.relative_rmse_experiment(
            cfg, kind, B=50, Ns=[100, 200, 500, 1000],
            nu0s=[0.05, 0.1, 0.15], workers=WORKERS,
        )
        ratios = {(c.N, c.nu0): c.stats["ratio"][0] for c in rep.cells}
        assert all(v < 1.0 for v in ratios.values()), (kind, ratios)
        for nu0 in (0.05, 0.1, 0.15):
            seq = [ratios[(N, nu0)] for N in (100, 200, 500, 1000)]
            assert all(a > b for a, b in zip(seq, seq[1:])), (kind, nu0, seq)
        details.append(
            f"{kind} max ratio {max(ratios.values()):.3f}"
        )
    report(2, f"all 12 cells per kind are proper fractions, decreasing in N "
              f"({'; '.join(details)})")

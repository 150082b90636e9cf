"""Command-line entry point: longitudinal CSV ingestion, decomposition,
Fréchet means, Fréchet regression and the Monte-Carlo bench commands.

CSV schemas
-----------
observations   ``subject_id,t,z`` (header required)
covariates     ``subject_id,x1,...,xp``
decompositions ``subject_id,component,abscissa,value`` with component in
               {size, rho, lambda, shape}; scalar components leave the
               abscissa empty
bench outputs  documented per command in the bench module

Times are affinely rescaled to the internal [0, 1] domain at the ingestion
boundary; all fitting happens on [0, 1].
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import bench, simgen
from .core import (
    Constraint,
    DEFAULT_SHAPE_POINTS,
    LongitudinalDataset,
    MonotoneDecomposition,
    PositiveDecomposition,
    RawObservations,
    SampledTrajectory,
    TimeGrid,
)
from .decomp import (
    decompose_monotone_estimated,
    decompose_positive_estimated,
    frechet_mean_monotone,
    frechet_mean_positive,
)
from .errors import (
    CsvFormatError,
    DomainError,
    InsufficientDataError,
    SizeShapeError,
)
from .recovery import BinSpec, default_bin_width
from .regress import (
    CovariateMatrix,
    KernelSpec,
    default_bandwidth,
    fit_monotone_regression,
    fit_positive_regression,
)

__all__ = [
    "LongitudinalDataset",
    "load_longitudinal_csv",
    "write_longitudinal_csv",
    "main",
]


def _parse_float(value: str, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise CsvFormatError(f"non-numeric value {value!r} in {where}") from None


def load_longitudinal_csv(
    path, time_range=None, covariates_path=None
) -> LongitudinalDataset:
    """Read observations (and optional covariates) into a dataset.

    ``time_range=[a, b]`` rescales times affinely from [a, b] onto [0, 1] and
    drops rows outside the window; without it the observed min/max define the
    rescaling. Duplicate (subject, t) rows are averaged; rows are sorted by
    (subject, t).
    """
    raw: dict[str, dict[float, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("subject_id", "t", "z"):
            if col not in header:
                raise CsvFormatError(f"{path}: missing column {col!r}")
        for rownum, row in enumerate(reader, start=2):
            sid = row["subject_id"]
            t = _parse_float(row["t"], f"{path}:{rownum} column 't'")
            z = _parse_float(row["z"], f"{path}:{rownum} column 'z'")
            raw.setdefault(sid, {}).setdefault(t, []).append(z)
    if not raw:
        raise CsvFormatError(f"{path}: no data rows")

    all_times = [t for per_subject in raw.values() for t in per_subject]
    if time_range is None:
        lo, hi = min(all_times), max(all_times)
        if 0.0 <= lo and hi <= 1.0:
            lo, hi = 0.0, 1.0  # already internal time; keep write/load exact
    else:
        lo, hi = float(time_range[0]), float(time_range[1])
    if not (hi > lo):
        raise DomainError(f"degenerate time range [{lo}, {hi}]")

    subjects = []
    for sid in sorted(raw):
        per_subject = raw[sid]
        pairs = sorted(
            (t, float(np.mean(zs)))
            for t, zs in per_subject.items()
            if lo <= t <= hi
        )
        if len(pairs) < 2:
            raise InsufficientDataError(
                f"subject {sid!r} has fewer than 2 observations in the window"
            )
        times = np.array([(t - lo) / (hi - lo) for t, _ in pairs])
        values = np.array([z for _, z in pairs])
        subjects.append((sid, RawObservations(TimeGrid(times), values)))

    covariates = None
    if covariates_path is not None:
        covariates = _load_covariates(covariates_path)
        missing = set(sid for sid, _ in subjects) ^ set(covariates)
        if missing:
            raise CsvFormatError(
                f"{covariates_path}: covariate ids do not match subjects: "
                f"{sorted(missing)}"
            )
    return LongitudinalDataset(tuple(subjects), covariates)


def _load_covariates(path) -> dict:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "subject_id" not in header:
            raise CsvFormatError(f"{path}: missing column 'subject_id'")
        x_cols = [c for c in header if c != "subject_id"]
        if not x_cols:
            raise CsvFormatError(f"{path}: no covariate columns")
        for rownum, row in enumerate(reader, start=2):
            sid = row["subject_id"]
            if sid in out:
                raise CsvFormatError(f"{path}: duplicate subject {sid!r}")
            out[sid] = tuple(
                _parse_float(row[c], f"{path}:{rownum} column {c!r}")
                for c in x_cols
            )
    if not out:
        raise CsvFormatError(f"{path}: no data rows")
    return out


def write_longitudinal_csv(dataset: LongitudinalDataset, path) -> None:
    """Write observations as ``subject_id,t,z`` (full float precision)."""
    rows = [["subject_id", "t", "z"]]
    for sid, obs in dataset.subjects:
        for t, z in zip(obs.times.points, obs.values):
            rows.append([sid, repr(float(t)), repr(float(z))])
    bench.write_csv(rows, path)


def write_covariates_csv(dataset: LongitudinalDataset, path) -> None:
    if dataset.covariates is None:
        raise DomainError("dataset carries no covariates")
    width = len(next(iter(dataset.covariates.values())))
    rows = [["subject_id"] + [f"x{j + 1}" for j in range(width)]]
    for sid in dataset.ids:
        rows.append([sid] + [repr(v) for v in dataset.covariates[sid]])
    bench.write_csv(rows, path)


def _decomposition_rows(label: str, d) -> list:
    rows = []
    if isinstance(d, PositiveDecomposition):
        rows.append([label, "size", "", repr(d.size)])
        shape = d.shape
    else:
        rows.append([label, "rho", "", repr(d.range)])
        rows.append([label, "lambda", "", repr(d.minimum)])
        shape = d.shape
    for a, v in zip(shape.abscissae, shape.ordinates):
        rows.append([label, "shape", repr(float(a)), repr(float(v))])
    return rows


def _trajectory_rows(label: str, traj: SampledTrajectory) -> list:
    return [
        [label, "trajectory", repr(float(t)), repr(float(v))]
        for t, v in zip(traj.grid.points, traj.values)
    ]


def _bins_for(dataset: LongitudinalDataset, arg: str) -> BinSpec:
    if arg == "auto":
        n = len(dataset)
        min_obs = min(len(obs) for _, obs in dataset.subjects)
        return BinSpec(default_bin_width(max(n, 2), min_obs))
    return BinSpec(float(arg))


def _decompose_all(dataset, constraint: str, bins: BinSpec, m: int):
    if constraint == "positive":
        return [
            decompose_positive_estimated(obs, bins, m)
            for _, obs in dataset.subjects
        ]
    return [
        decompose_monotone_estimated(obs, bins, m) for _, obs in dataset.subjects
    ]


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--constraint", choices=["positive", "monotone"],
                   required=True)
    p.add_argument("--bins", default="auto",
                   help="bin width in (0,1], or 'auto' for the rule of thumb")
    p.add_argument("--grid", type=int, default=DEFAULT_SHAPE_POINTS,
                   metavar="M", help="shape grid resolution")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-range", type=float, nargs=2, metavar=("A", "B"),
                   default=None, help="external time window mapped to [0,1]")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sizeshape",
        description="Size-shape decomposition tools for constrained "
        "functional data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--constraint", choices=["positive", "monotone"],
                   required=True)
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--regression", action="store_true",
                   help="use the covariate-dependent design")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--grid", type=int, default=DEFAULT_SHAPE_POINTS)
    p.add_argument("--out", required=True, help="observations CSV path")
    p.add_argument("--covariates-out", default=None)

    p = sub.add_parser("decompose", help="per-subject size/shape estimates")
    p.add_argument("--input", required=True)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mean", help="Fréchet mean of the sample")
    p.add_argument("--input", required=True)
    _add_fit_flags(p)
    p.add_argument("--baseline", action="store_true",
                   help="also write the transformation-approach mean")
    p.add_argument("--out", required=True)

    p = sub.add_parser("regress", help="conditional components over an x grid")
    p.add_argument("--input", required=True)
    p.add_argument("--covariates", required=True)
    _add_fit_flags(p)
    p.add_argument("--x", type=float, nargs="+", default=None)
    p.add_argument("--x-grid", type=float, nargs=3, default=None,
                   metavar=("MIN", "MAX", "COUNT"))
    p.add_argument("--local", action="store_true")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rmse", help="RMSE table over (N, nu0) cells")
    p.add_argument("--constraint", choices=["positive", "monotone"],
                   required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--B", type=int, default=50)
    p.add_argument("--Ns", type=int, nargs="+", default=None)
    p.add_argument("--nu0s", type=float, nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("relative-rmse",
                       help="error ratio against the baseline mean")
    p.add_argument("--constraint", choices=["positive", "monotone"],
                   required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--B", type=int, default=50)
    p.add_argument("--Ns", type=int, nargs="+", default=None)
    p.add_argument("--nu0s", type=float, nargs="+", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rate-check", help="empirical convergence-rate slopes")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--Ns", type=int, nargs="+",
                   default=[100, 1000, 10000, 100000])
    p.add_argument("--nu0", type=float, default=0.1)
    p.add_argument("--B", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True,
                   help="recovery curve CSV; size curve goes to *_size.csv")

    p = sub.add_parser("regress-compare",
                       help="fitted vs oracle conditional components")
    p.add_argument("--constraint", choices=["positive", "monotone"],
                   required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--bins", default="auto",
                   help="bin width in (0,1], or 'auto' for the rule of thumb")
    p.add_argument("--x-grid", type=float, nargs=3, required=True,
                   metavar=("MIN", "MAX", "COUNT"))
    p.add_argument("--mode", choices=["global", "local"], default="global")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    return parser


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    from dataclasses import replace

    return replace(cfg, seed=seed)


def _cmd_simulate(args) -> int:
    m = args.grid
    if args.regression:
        cfg = _with_seed(simgen.load_config(args.config, "regression"), args.seed)
        dataset, _, _ = simgen.generate_regression(cfg, args.constraint, m)
        write_longitudinal_csv(dataset, args.out)
        if args.covariates_out:
            write_covariates_csv(dataset, args.covariates_out)
        return 0
    cfg = _with_seed(simgen.load_config(args.config, args.constraint), args.seed)
    if args.constraint == "positive":
        dataset, _ = simgen.generate_positive(cfg, m)
    else:
        dataset, _ = simgen.generate_monotone(cfg, m)
    write_longitudinal_csv(dataset, args.out)
    return 0


def _cmd_decompose(args) -> int:
    dataset = load_longitudinal_csv(args.input, time_range=args.time_range)
    bins = _bins_for(dataset, args.bins)
    ds = _decompose_all(dataset, args.constraint, bins, args.grid)
    rows = [["subject_id", "component", "abscissa", "value"]]
    for sid, d in zip(dataset.ids, ds):
        rows.extend(_decomposition_rows(sid, d))
    bench.write_csv(rows, args.out)
    return 0


def _cmd_mean(args) -> int:
    dataset = load_longitudinal_csv(args.input, time_range=args.time_range)
    bins = _bins_for(dataset, args.bins)
    ds = _decompose_all(dataset, args.constraint, bins, args.grid)
    if args.constraint == "positive":
        mean, traj = frechet_mean_positive(ds)
    else:
        mean, traj = frechet_mean_monotone(ds)
    rows = [["subject_id", "component", "abscissa", "value"]]
    rows.extend(_decomposition_rows("mean", mean))
    rows.extend(_trajectory_rows("mean", traj))
    if args.baseline:
        base = bench.baseline_mean_estimator(
            dataset, bins, args.constraint, args.grid
        )
        rows.extend(_trajectory_rows("baseline", base))
    bench.write_csv(rows, args.out)
    return 0


def _x_values(args) -> list:
    if args.x is not None:
        return [float(v) for v in args.x]
    if args.x_grid is not None:
        lo, hi, count = args.x_grid
        return [float(v) for v in np.linspace(lo, hi, int(count))]
    raise DomainError("regress needs --x or --x-grid")


def _cmd_regress(args) -> int:
    dataset = load_longitudinal_csv(
        args.input, time_range=args.time_range, covariates_path=args.covariates
    )
    bins = _bins_for(dataset, args.bins)
    ds = _decompose_all(dataset, args.constraint, bins, args.grid)
    X = CovariateMatrix(dataset.covariate_rows())
    if X.p != 1:
        raise DomainError(
            "the regress command sweeps a scalar predictor; use the library "
            "API for multivariate designs"
        )
    mode = "local" if args.local else "global"
    kernel = None
    if mode == "local":
        kernel = KernelSpec(bandwidth=args.bandwidth or default_bandwidth(X))
    rows = [["x", "component", "abscissa", "value"]]
    for x in _x_values(args):
        if args.constraint == "positive":
            fit, traj = fit_positive_regression(ds, X, x, mode, kernel)
        else:
            fit, traj = fit_monotone_regression(ds, X, x, mode, kernel)
        label = repr(float(x))
        rows.extend(_decomposition_rows(label, fit))
        rows.extend(_trajectory_rows(label, traj))
    bench.write_csv(rows, args.out)
    return 0


def _cmd_rmse(args) -> int:
    cfg = _with_seed(simgen.load_config(args.config, args.constraint), args.seed)
    report = bench.rmse_experiment(
        cfg, args.constraint, args.B, Ns=args.Ns, nu0s=args.nu0s,
        workers=args.workers,
    )
    bench.write_csv(report.csv_rows(), args.out)
    return 0


def _cmd_relative_rmse(args) -> int:
    cfg = _with_seed(simgen.load_config(args.config, args.constraint), args.seed)
    report = bench.relative_rmse_experiment(
        cfg, args.constraint, args.B, Ns=args.Ns, nu0s=args.nu0s,
        workers=args.workers,
    )
    bench.write_csv(report.csv_rows(), args.out)
    return 0


def _cmd_rate_check(args) -> int:
    report = bench.rate_check(
        args.n, args.Ns, args.nu0, args.B, seed=args.seed, workers=args.workers
    )
    bench.write_csv(report.csv_rows("recovery"), args.out)
    size_path = _sibling_path(args.out, "_size")
    bench.write_csv(report.csv_rows("size"), size_path)
    return 0


def _sibling_path(path: str, suffix: str) -> str:
    if path.endswith(".csv"):
        return path[: -len(".csv")] + suffix + ".csv"
    return path + suffix


def _cmd_regress_compare(args) -> int:
    cfg = _with_seed(simgen.load_config(args.config, "regression"), args.seed)
    lo, hi, count = args.x_grid
    x_grid = np.linspace(lo, hi, int(count))
    bins = None if args.bins == "auto" else BinSpec(float(args.bins))
    report = bench.regression_comparison(
        cfg, args.constraint, x_grid, mode=args.mode, bandwidth=args.bandwidth,
        bins=bins,
    )
    bench.write_csv(report.csv_rows(), args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "decompose": _cmd_decompose,
    "mean": _cmd_mean,
    "regress": _cmd_regress,
    "rmse": _cmd_rmse,
    "relative-rmse": _cmd_relative_rmse,
    "rate-check": _cmd_rate_check,
    "regress-compare": _cmd_regress_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SizeShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Size-shape decomposition, Fréchet means and Fréchet regression for
positivity- and monotonicity-constrained functional data, with a seeded
Monte-Carlo bench."""

from .core import (
    CdfGrid,
    Constraint,
    DEFAULT_SHAPE_POINTS,
    DensityGrid,
    LongitudinalDataset,
    MetricWeights,
    MonotoneDecomposition,
    PositiveDecomposition,
    QuantileGrid,
    RawObservations,
    SampledTrajectory,
    TimeGrid,
    evaluate,
    l2_distance,
    metric_monotone,
    metric_positive,
    unit_grid,
)
from .decomp import (
    decompose_monotone_estimated,
    decompose_monotone_exact,
    decompose_positive_estimated,
    decompose_positive_exact,
    frechet_mean_monotone,
    frechet_mean_positive,
    recompose_monotone,
    recompose_positive,
)
from .quantile import (
    cdf_from_quantile,
    density_from_quantile,
    project_to_quantile_space,
    quantile_barycenter,
    quantile_from_cdf,
    quantile_from_density,
    wasserstein,
)
from .recovery import (
    BinSpec,
    default_bin_width,
    default_bin_width_irregular,
    recover_trajectory,
)
from .regress import (
    CovariateMatrix,
    KernelFamily,
    KernelSpec,
    default_bandwidth,
    fit_monotone_regression,
    fit_positive_regression,
    global_weights,
    local_weights,
    regress_shape,
    regress_size,
)

__version__ = "0.1.0"

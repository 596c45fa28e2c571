"""DOA estimation in unknown partially correlated noise.

The sample covariance of a sensor array is split into a low-rank source
term plus a sparse noise term by convex programming; source directions
are then read off a sparse spatial spectrum over a grid of candidate
angles. Works for correlated and coherent sources and for any noise
covariance with a known sparsity pattern (banded, block-diagonal,
diagonal), with an unknown-pattern fallback.
"""

from .arrays import (
    AngularGrid,
    ArrayGeometry,
    khatri_rao_manifold,
    manifold_matrix,
    steering_vector,
)
from .crb import (
    ParameterVector,
    crb_doa,
    fisher_information,
    steering_derivative,
)
from .experiments import (
    ExperimentConfig,
    HistogramRow,
    ResultRow,
    config_from_dict,
    config_from_yaml,
    histogram_to_csv,
    results_to_csv,
    rmse,
    run_experiment,
    run_histogram,
)
from .pipeline import (
    DoaEstimate,
    SpatialSpectrum,
    coarse_to_fine_correlated,
    estimate_doas_joint,
    estimate_doas_uncorrelated,
    estimate_doas_unknown_support,
    find_peaks,
    spectrum_from_matrix,
)
from .prox import (
    ProxConfig,
    project_psd,
    prox_l1_nonneg,
    prox_l1_psd_matrix,
    prox_l2_block,
    prox_nuclear_psd,
    soft_threshold,
    support_projection,
)
from .simulate import (
    NoiseModel,
    SourceScenario,
    sample_covariance,
    simulate_snapshots,
    tridiagonal_noise_covariance,
    true_covariance,
)
from .solvers import (
    MaskedKrOperator,
    RegularizationSet,
    SolverConfig,
    SolverReport,
    lambda_u_rule,
    solve_joint,
    solve_lowrank_completion,
    solve_sparse_source_cov,
    solve_uncorrelated,
    solve_unknown_support,
)
from .support import SupportSet, band_support, block_support

__version__ = "0.1.0"

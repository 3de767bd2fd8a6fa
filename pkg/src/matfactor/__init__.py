"""Matrix time series regression with known and latent factors."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CoefficientMatrix,
    DimensionMismatchError,
    KnownFactorSeries,
    LatentFactorSeries,
    LoadingBasis,
    MatfactorError,
    MatrixSeries,
    ModelEstimate,
    NonFiniteError,
    Spectrum,
    validate_pair,
)
from .estimator import (  # noqa: E402
    EstimationOptions,
    build_m_matrix,
    compute_residuals,
    eigen_sorted,
    estimate_dim_ratio,
    estimate_latent,
    extract_loading,
    fit,
    fit_coefficient,
    fitted_values,
    lag_cross_cov,
    reconstruct_signals,
)
from .metrics import (  # noqa: E402
    ReplicationSummary,
    coefficient_error,
    dim_accuracy,
    out_of_sample_r2,
    signal_recovery_error,
    subspace_distance,
    varimax_rotate,
)
from .simulator import GroundTruth, SimulationConfig, generate, run_replication  # noqa: E402

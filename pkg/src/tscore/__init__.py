"""Score-matching and likelihood estimators for stationary Gaussian
time-series models, plus the Monte Carlo harness that compares their
efficiency."""

from .errors import (
    ConfigError,
    DegreesOfFreedomError,
    DimensionMismatch,
    DomainError,
    ExperimentError,
    NonFinite,
    NotConverged,
    NotPositiveDefinite,
    SingularInformation,
    TscoreError,
    ZeroDenominator,
)
from .estimation import (
    EstimatorKind,
    FitResult,
    GodambeInfo,
    are,
    fit,
    fit_single_series,
    godambe_sd,
    minimize_scalar,
    numeric_derivative,
)
from .models import (
    CovarianceBundle,
    ModelFamily,
    ModelSpec,
    Theta,
    autocovariance,
    build_covariance,
    covariance_from_autocovariances,
    parameter_domain,
)
from .scoring import (
    SeriesPanel,
    SspMatrix,
    gaussian_loglik,
    hyvarinen_single,
    hyvarinen_total,
    hyvarinen_wishart,
    hyvarinen_wishart_gradient,
    pairwise_ar1_closed_form,
    pairwise_loglik,
    sufficient_statistic,
)
from .simulation import (
    EstimatorSummary,
    ExperimentConfig,
    ExperimentSummary,
    run_experiment,
    simulate_ar1,
    simulate_gaussian_exact,
    simulate_panel,
)

__version__ = "0.1.0"

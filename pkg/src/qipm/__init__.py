"""Analytic and Monte-Carlo toolkit for a parametric-mixer quantum-illumination receiver."""

from .gaussian import (
    GaussianState,
    apply_beam_splitter,
    apply_two_mode_squeezer,
    is_p_representable,
    mean_photon,
    photon_covariance,
    photon_variance,
    reduced,
    tensor,
    thermal_state,
    tmsv_state,
)
from .montecarlo import (
    EmpiricalResult,
    NonClassicalStateError,
    SamplerSpec,
    empirical_error_probability,
    sample_counts,
)
from .receiver import (
    Counter,
    DetectionStatistics,
    DetectorModel,
    IDEAL_DETECTOR,
    ReceiverConfig,
    apply_detector,
    classical_reference_exponent,
    cpc_statistics,
    effective_exponent,
    error_probability,
    h0_cross_covariance,
    h1_cross_covariance,
    individual_statistics,
    log10_error_probability,
    mixer_output,
    ml_threshold,
    optimal_gain,
    optimal_weights,
    proportional_weights,
    quantum_advantage_db,
    weight_relation_residual,
)
from .resolution import (
    ModelViolationError,
    TruncatedGeometric,
    finite_k_statistics,
    pmf,
    truncated_mean,
    truncated_variance,
)
from .scenario import (
    HypothesisPair,
    Scenario,
    build_hypotheses,
    classical_error_probability,
    classical_exponent,
    classical_log10_error_probability,
    qcb_curve,
    quantum_exponent,
)

__version__ = "0.1.0"

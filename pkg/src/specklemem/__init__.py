"""Noise memory effect of multiply scattered light.

Closed-form frequency correlations of photon-number fluctuations in
transmitted speckle (shot noise, classical noise, arbitrary single-mode
quantum states), cross-validated by a Monte Carlo engine that simulates
frequency-correlated circular Gaussian transmission amplitudes.
"""

from .correlations import (
    CorrelationCurve,
    DiffusionGeometry,
    classical_noise_correlation,
    intensity_decay,
    mesoscopic_kernel,
    noise_correlation_expansion,
    quantum_noise_correlation,
    shot_noise_correlation,
    transmission_pair_moment,
)
from .ensemble import (
    CLASSICAL,
    MomentRecord,
    MomentReport,
    NoiseCorrelationEstimate,
    RayleighCheck,
    SpeckleEnsemble,
    build_ensemble,
    build_field_covariance,
    estimate_moments,
    estimate_noise_correlation,
    field_kernel,
    generate_ensemble,
    load_ensemble_csv,
    rayleigh_check,
    save_ensemble_csv,
    substream,
)
from .errors import (
    CovarianceModelError,
    DivergenceError,
    DomainError,
    EstimationError,
    SingularParameterError,
    SpeckleMemError,
    UnsupportedSamplingError,
)
from .photons import (
    CountSummary,
    QuantumState,
    sample_transmitted_counts,
    summarize_counts,
    transmitted_variance_classical,
    transmitted_variance_quantum,
)

__version__ = "0.1.0"

__all__ = [
    "CLASSICAL",
    "CorrelationCurve",
    "CountSummary",
    "CovarianceModelError",
    "DiffusionGeometry",
    "DivergenceError",
    "DomainError",
    "EstimationError",
    "MomentRecord",
    "MomentReport",
    "NoiseCorrelationEstimate",
    "QuantumState",
    "RayleighCheck",
    "SingularParameterError",
    "SpeckleEnsemble",
    "SpeckleMemError",
    "UnsupportedSamplingError",
    "build_ensemble",
    "build_field_covariance",
    "classical_noise_correlation",
    "estimate_moments",
    "estimate_noise_correlation",
    "field_kernel",
    "generate_ensemble",
    "intensity_decay",
    "load_ensemble_csv",
    "mesoscopic_kernel",
    "noise_correlation_expansion",
    "quantum_noise_correlation",
    "rayleigh_check",
    "sample_transmitted_counts",
    "save_ensemble_csv",
    "shot_noise_correlation",
    "substream",
    "summarize_counts",
    "transmission_pair_moment",
    "transmitted_variance_classical",
    "transmitted_variance_quantum",
]

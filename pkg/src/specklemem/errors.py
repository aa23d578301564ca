"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so estimator and analytics code
should raise the most specific class that applies.
"""


class SpeckleMemError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SpeckleMemError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DivergenceError(DomainError):
    """The requested point sits on a genuine divergence of the model.

    The mesoscopic kernel diverges at zero frequency offset (a plane-wave
    artifact); callers must use strictly positive offsets rather than
    receiving a silent infinity.
    """


class SingularParameterError(DomainError):
    """A parameter combination makes a closed-form denominator vanish."""


class CovarianceModelError(SpeckleMemError):
    """A covariance matrix is indefinite beyond numerical tolerance."""


class EstimationError(SpeckleMemError, ValueError):
    """Not enough data to run an estimator at the requested fidelity."""


class UnsupportedSamplingError(SpeckleMemError, ValueError):
    """No exact photon-count law exists for the requested state kind."""

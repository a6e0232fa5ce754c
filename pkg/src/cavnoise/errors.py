"""Exception hierarchy.

The three branches map onto the CLI exit-code contract: ``ValidationError``
exits 1 (bad inputs or configuration), ``NumericalError`` exits 2 (unstable
loops, degenerate denominators, diverged integrations, failed root finding),
``ComparisonFailure`` exits 3 (oracle-versus-analytic mismatch).
"""


class CavNoiseError(Exception):
    """Base class for all package errors."""


class ValidationError(CavNoiseError):
    """Invalid parameters, grids, spectra or configuration."""


class NumericalError(CavNoiseError):
    """A numerical procedure failed or refused to proceed."""


class ComparisonFailure(CavNoiseError):
    """An oracle-versus-analytic comparison exceeded its tolerance."""


# --- validation -------------------------------------------------------------

class NonPositiveInputCoupling(ValidationError):
    """kappa_in must be > 0: an undrivable cavity has no steady state."""


class NegativeRate(ValidationError):
    """Loss rates must be >= 0."""


class InvalidParameter(ValidationError):
    """A scalar parameter is outside its documented domain."""


class UncertaintyViolation(ValidationError):
    """Amplitude/phase noise product dropped below the vacuum bound of 1."""


class OutsideTabulatedRange(ValidationError):
    """Tabulated spectra refuse to extrapolate beyond their grid."""


class GridMismatch(ValidationError):
    """Two quantities that must share a frequency grid do not."""


class ZeroOutputCoupling(ValidationError):
    """kappa_out = 0: no transmitted field, no feedback path."""


class InvalidSqueezeFactor(ValidationError):
    """Squeeze factor must lie in (0, 1]."""


class InvalidResidual(ValidationError):
    """Residual fraction must lie in (0, 1]."""


class UnknownParameter(ValidationError):
    """Sweep parameter is not one of the supported names."""


class MissingFilter(ValidationError):
    """The requested command needs a [filter] section."""


class InsufficientData(ValidationError):
    """Time series too short for the requested spectral estimate."""


class NoBandOverlap(ValidationError):
    """Estimated and analytic spectra share no frequency support."""


class ConfigError(ValidationError):
    """Scenario configuration failed to parse or validate."""


# --- numerical --------------------------------------------------------------

class DegenerateDenominator(NumericalError):
    """Closed-loop response denominator vanished; the loop is marginal or
    unstable at some grid frequency."""


class NumericalRootFailure(NumericalError):
    """Root finding did not converge to a trustworthy answer."""


class UnstableLoop(NumericalError):
    """Stability pre-check failed before a time-domain simulation."""


class DivergenceDetected(NumericalError):
    """A simulated sample exceeded the divergence bound."""

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index

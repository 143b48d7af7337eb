"""
Exception hierarchy for the photon-pair source toolkit.

Every exception carries the command-line exit code it maps to, so the CLI can
translate failures without inspecting messages.
"""


class PhotonPairError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class ConfigError(PhotonPairError):
    """Invalid configuration or command-line usage."""

    exit_code = 1


class OutputError(PhotonPairError):
    """Failure while reading or writing files."""

    exit_code = 3


class DomainError(PhotonPairError):
    """A parameter lies outside the domain of a model or solver."""


class SingularityError(DomainError):
    """A wavelength sits exactly on a Sellmeier resonance."""


class NoSolutionError(DomainError):
    """The phase mismatch never changes sign inside the search bracket."""

    def __init__(self, message, bracket=None, mismatch=None):
        super().__init__(message)
        self.bracket = bracket
        self.mismatch = mismatch


class DegenerateOnlyError(DomainError):
    """Zero birefringence leaves only the degenerate root."""


class InconsistentInputError(DomainError):
    """Measured wavelengths violate energy conservation beyond tolerance."""


class GridTooSmallError(DomainError):
    """The phase-matching ridge is not contained in the frequency grid."""


class FilteredToNothingError(DomainError):
    """A filter chain removed (almost) the whole joint spectrum."""


class AmbiguousPeakError(DomainError):
    """A spectrum has more than one region above half maximum."""


class NumericalError(DomainError):
    """A numerical routine failed to converge or ran past its limits."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EstimatorUndefinedError(DomainError):
    """An estimator has a zero denominator; the raw counts are attached."""

    def __init__(self, message, counts=None):
        super().__init__(message)
        self.counts = counts or {}

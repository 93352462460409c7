"""Exception hierarchy shared by all tscore modules."""


class TscoreError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(TscoreError):
    """A matrix required to be symmetric positive definite is not."""


class DomainError(TscoreError):
    """A parameter lies outside its admissible domain."""


class DimensionMismatch(TscoreError):
    """Array shapes are inconsistent with each other."""


class DegreesOfFreedomError(TscoreError):
    """Too few series for the Wishart-based score (need n >= T + 2)."""


class ZeroDenominator(TscoreError):
    """A closed-form estimator's denominator vanished (degenerate data)."""


class NonFinite(TscoreError):
    """An objective returned a non-finite value during optimization."""


class NotConverged(TscoreError):
    """An optimizer exhausted its evaluation budget."""


class SingularInformation(TscoreError):
    """The sensitivity (Hessian) estimate is numerically zero."""


class ConfigError(TscoreError):
    """Invalid experiment configuration or CLI input.

    Carries an optional section/field pair so the CLI can point at the
    offending entry.
    """

    def __init__(self, message, section=None, field=None):
        self.section = section
        self.field = field
        prefix = ""
        if section is not None:
            prefix += f"[{section}] "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class ExperimentError(TscoreError):
    """A Monte Carlo grid point failed (too many replicate errors)."""

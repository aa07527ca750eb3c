"""Exception hierarchy shared by the solvers, verifiers and the CLI."""


class FastTrackError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FastTrackError, ValueError):
    """An input lies outside its documented range."""


class AffordabilityError(DomainError):
    """An agent is asked to pay a price larger than their income."""


class CapacityError(DomainError):
    """Capacity must lie strictly inside (0, 1)."""


class DegenerateSystemError(DomainError):
    """A priority system with c2 >= c1 outside the explicit collapse constructor."""


class UnsupportedDistributionError(FastTrackError):
    """The distribution cannot be handled (unknown descriptor or atoms)."""


class NumericalError(FastTrackError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InfeasibleError(NumericalError):
    """No value of the free variable clears the market.

    ``mass_range`` holds the (low, high) clearing mass achievable over the
    free variable's interval.
    """

    def __init__(self, message, mass_range=None):
        super().__init__(message)
        self.mass_range = mass_range


class ConfigError(DomainError):
    """A run configuration is malformed or out of range."""

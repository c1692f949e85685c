"""Exception hierarchy shared by all pdom modules."""


class PdomError(Exception):
    """Base class for all package errors."""


class DimensionError(PdomError):
    """Inconsistent matrix or channel dimensions."""


class NumericalError(PdomError):
    """A numerical routine failed to converge or left its valid range."""


class NonHyperbolicError(PdomError):
    """An eigenvalue sits too close to the shifted imaginary axis.

    The dominance test is inconclusive at this rate; callers should report
    "inconclusive" rather than pass/fail.
    """


class SplitMismatchError(PdomError):
    """The requested dominant dimension disagrees with the actual eigenvalue split."""


class UnsupportedConfigurationError(PdomError):
    """A structurally valid input falls outside the supported configuration."""


class RateMismatchError(PdomError):
    """Interconnected certificates do not share a uniform rate."""


class CouplingError(PdomError):
    """The interconnection coupling condition does not hold."""


class LmiInfeasibleError(PdomError):
    """Feasibility search exhausted its budget; carries the final report.

    This is a failure report, not a proof of infeasibility.
    """

    def __init__(self, report):
        super().__init__(str(report))
        self.report = report


class PropertyViolationError(PdomError):
    """An empirically validated property failed on a concrete trajectory."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details

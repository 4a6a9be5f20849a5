"""Exception types shared across the package."""


class SpinglassError(Exception):
    """Base class for package errors."""


class InstanceFormatError(SpinglassError, ValueError):
    """Malformed instance, graph or problem input."""


class InvalidStateError(SpinglassError, ValueError):
    """A packed state has bits set at or beyond the variable count."""


class SizingError(SpinglassError):
    """A request would exceed a configured memory or enumeration cap.

    Attributes
    ----------
    report : dict
        Estimated requirement and the cap that refused it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = dict(report or {})


class DefinitenessError(SpinglassError, ValueError):
    """The energy objective was requested for a matrix that is not positive definite."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class OrderError(SpinglassError, ValueError):
    """Partial configuration does not cover the sites that precede the requested one."""

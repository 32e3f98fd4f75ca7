"""Exception types shared across the toolkit."""


class EcalignError(Exception):
    """Base class for all toolkit errors."""


class LoadError(EcalignError):
    """Raised when an input file is missing, malformed or empty."""


class DegenerateSpectrumError(EcalignError):
    """Raised when the second eigenvalue of a reduced matrix is not isolated."""


class ConvergenceError(EcalignError):
    """Raised when an iterative fit stops short of its gradient tolerance."""


class StageDependencyError(EcalignError):
    """Raised when a pipeline stage is run before its inputs exist."""

"""Exception types shared across the package."""


class SusguardError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SusguardError):
    """Malformed or inconsistent configuration input."""


class InfeasibleMiscoverageError(SusguardError):
    """Requested miscoverage epsilon is below 1/(N+1), so k(eps) > N."""


class TooFewErrorsError(SusguardError):
    """Calibration needs at least two error states for leave-one-out scores."""


class DimensionMismatchError(SusguardError):
    """Query point dimension differs from the calibration data dimension."""


class DegenerateInputError(SusguardError):
    """Degenerate request, e.g. a coverage run with zero test draws."""


class UnsupportedDissimilarityError(SusguardError):
    """No closed geometric form exists for the requested dissimilarity."""


class DegenerateHalfspaceError(SusguardError):
    """Halfspace selection failed: all candidate normals are zero."""


class GimbalSingularityError(SusguardError):
    """Pitch too close to +-pi/2 for the Euler-rate map to be invertible."""


class EmptyBackupSetError(SusguardError):
    """A policy switch was required but no backup trajectory is available."""


class QpSolveError(SusguardError):
    """QP solver failed to produce an acceptable solution."""


class ConvergenceError(SusguardError):
    """An iterative solver ran out of iterations before its tolerance."""


class CollectionBudgetError(SusguardError):
    """Dataset collection exceeded its rollout budget before the stop rule."""


class GuaranteeViolationError(SusguardError):
    """An experiment preset failed one of its built-in statistical bounds."""

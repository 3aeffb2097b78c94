"""Exception hierarchy shared by every module."""


class HadronPolesError(Exception):
    """Base class for all library errors."""


class ConfigurationError(HadronPolesError, ValueError):
    """Invalid model or analysis configuration."""


class SingularKinematicsError(HadronPolesError, ZeroDivisionError):
    """Kinematics evaluated at a singular point (e.g. s = 0)."""


class AmbiguousBranchError(HadronPolesError, ValueError):
    """A branch point was hit without an explicit i0 prescription."""


class PoleProximityError(HadronPolesError, ArithmeticError):
    """The inverse amplitude is numerically singular at the evaluation point."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class NoOpenChannelError(HadronPolesError, ValueError):
    """S-matrix requested below every threshold."""


class SearchFailedError(HadronPolesError, RuntimeError):
    """Pole search did not converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ContourInvalidError(HadronPolesError, ValueError):
    """Residue contour would cross a cut or enclose a branch point."""


class ResolutionError(HadronPolesError, RuntimeError):
    """Quadrature result is not converged under grid refinement."""


class ContinuationBlockedError(HadronPolesError, ValueError):
    """Contour rotation into the second sheet is obstructed."""


class DegenerateInputError(HadronPolesError, ValueError):
    """Input lies on the boundary of an operation's domain."""


class InfeasibleError(HadronPolesError, ValueError):
    """Constraint system has no admissible solution."""

    def __init__(self, message, frontier=None):
        super().__init__(message)
        self.frontier = frontier


class MultiPoleContaminationWarning(UserWarning):
    """Extracted residue matrix is not rank one within tolerance."""


class CutoffWarning(UserWarning):
    """Integrand has not decayed at the edge of the momentum grid."""

"""Exception hierarchy shared by every module of the package."""


class RpfError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RpfError, ValueError):
    """A scalar parameter is outside its admissible domain."""


class InvalidInputError(RpfError, ValueError):
    """Matrix shapes or structure do not satisfy an operation's preconditions."""


class ConstraintViolationError(RpfError, ValueError):
    """The uncertainty realization violates ``delta1**2 + delta2**2 <= 1``."""


class SolverError(RpfError):
    """A matrix equation could not be solved to the required accuracy."""


class NoStabilizingSolutionError(SolverError):
    """The Riccati equation has no stabilizing solution."""


class InfeasibleEpsilonError(NoStabilizingSolutionError):
    """The robust Riccati equation has no stabilizing solution at this epsilon."""

    def __init__(self, epsilon, reason=""):
        self.epsilon = epsilon
        msg = f"no stabilizing robust Riccati solution at epsilon={epsilon:.6g}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class NoFeasibleEpsilonError(SolverError):
    """Every epsilon in a scan was infeasible."""


class UnstableSystemError(SolverError):
    """A Lyapunov equation was posed with a non-Hurwitz system matrix."""


class UnstableLoopError(UnstableSystemError):
    """The plant/filter closed loop is not asymptotically stable."""

    def __init__(self, message, delta=None):
        self.delta = delta
        super().__init__(message)


class DesignFailureError(SolverError):
    """A filter design violated an internal consistency postcondition."""


class InvalidConfigError(RpfError, ValueError):
    """A run or simulation configuration is malformed or out of range."""

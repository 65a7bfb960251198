"""Exception hierarchy shared by the numerical core, the CLI and the explorer."""


class LoewnerToolkitError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(LoewnerToolkitError, ValueError):
    """An operation was called outside its domain."""


class ConfigError(LoewnerToolkitError, ValueError):
    """A configuration file or flag could not be resolved."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class InvariantViolation(LoewnerToolkitError):
    """A checked property did not hold."""


class SolverError(LoewnerToolkitError):
    """Numerical failure of an integrator, a summation or an optimizer."""


class SingularApproachError(SolverError):
    """The gap |f - lambda| fell below the configured minimum."""

    def __init__(self, message, t, state, gap):
        self.t = t
        self.state = state
        self.gap = gap
        super().__init__(message)


class StepSizeUnderflowError(SolverError):
    def __init__(self, message, position, step):
        self.position = position
        self.step = step
        super().__init__(message)


class BranchViolationError(SolverError):
    def __init__(self, message, t):
        self.t = t
        super().__init__(message)


class SeedValidationError(SolverError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(message)


class PadeDegeneracyError(SolverError):
    def __init__(self, message, order):
        self.order = order
        super().__init__(message)


class PoleOnRayError(SolverError):
    def __init__(self, message, poles):
        self.poles = list(poles)
        super().__init__(message)


class QuadratureError(SolverError):
    def __init__(self, message, achieved):
        self.achieved = achieved
        super().__init__(message)


class TailEstimateError(SolverError):
    def __init__(self, message, sequence):
        self.sequence = list(sequence)
        super().__init__(message)


class MajorantBracketError(SolverError):
    def __init__(self, message, profile):
        self.profile = profile
        super().__init__(message)


class ArtifactError(LoewnerToolkitError):
    """An artifact could not be written or read back."""

    def __init__(self, message, path):
        self.path = path
        super().__init__(f"{message}: {path}")

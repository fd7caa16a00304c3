"""Exception types shared by the numerical modules and mapped to CLI exit codes."""


class SigmakError(Exception):
    """Base class. ``details`` carries structured diagnostics for reports."""

    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class PreconditionError(SigmakError, ValueError):
    exit_code = 2


class DomainError(PreconditionError):
    pass


class StencilError(PreconditionError):
    pass


class ConeError(PreconditionError):
    pass


class ConeExit(ConeError):
    pass


class NondegeneracyViolation(PreconditionError):
    pass


class BoundaryZero(PreconditionError):
    pass


class DegenerateZero(PreconditionError):
    pass


class DivergentTail(PreconditionError):
    pass


class ResolutionError(PreconditionError):
    pass


class ConvergenceError(SigmakError, RuntimeError):
    exit_code = 3


class NoConvergence(ConvergenceError):
    pass


class StepUnderflow(ConvergenceError):
    pass

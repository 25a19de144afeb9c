"""Exception hierarchy for renewglm."""


class RenewGLMError(Exception):
    """Base class for all package errors."""


class ContractViolation(RenewGLMError, ValueError):
    """An input broke an operation's precondition (shape, range, ordering)."""


class NumericOverflowError(RenewGLMError, FloatingPointError):
    """A likelihood quantity became non-finite."""


class DegenerateStreamError(RenewGLMError):
    """No coordinate carries any information (every diagonal Hessian entry is zero)."""


class RefitDegenerateError(RenewGLMError):
    """The active-block Hessian used by the refit is singular or indefinite."""

    def __init__(self, indices, message=None):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(message or f"refit Hessian not positive definite on indices {self.indices}")


class BatchParseError(RenewGLMError, ValueError):
    """A batch file could not be parsed; ``row`` is the 1-based file line."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class CheckpointError(RenewGLMError):
    """Base class for checkpoint loading failures."""


class UnsupportedVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass

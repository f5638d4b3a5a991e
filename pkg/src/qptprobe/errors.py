"""Exception types raised across the package."""


class QPTError(Exception):
    """Base class for all package errors."""


class NonHermitianError(QPTError, ValueError):
    pass


class NonSquareError(QPTError, ValueError):
    pass


class DimensionMismatchError(QPTError, ValueError):
    pass


class DimensionTooLargeError(QPTError, ValueError):
    pass


class DimensionTooSmallError(QPTError, ValueError):
    pass


class InvalidSplitError(QPTError, ValueError):
    pass


class NotNormalizedError(QPTError, ValueError):
    pass


class OptimizerDidNotConverge(QPTError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OutOfRangeError(QPTError, ValueError):
    pass


class DegenerateGroundStateError(QPTError):
    """A ground state was requested exactly at a level crossing."""


class NotCyclicError(QPTError, ValueError):
    pass


class IdenticalStatesError(QPTError, ValueError):
    pass


class NotParityEigenstatesError(QPTError, ValueError):
    pass


class SameParityError(QPTError, ValueError):
    pass


class InsufficientLevelsError(QPTError, ValueError):
    pass


class ExpressionError(QPTError, ValueError):
    """Evaluation failure (division by zero, sqrt of a negative, ...)."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class ConfigError(QPTError, ValueError):
    def __init__(self, message, section=None, key=None, line=None):
        where = []
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.section = section
        self.key = key
        self.line = line


class CacheCorruptError(QPTError):
    pass

"""Exception and warning types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrix(ArithmeticError):
    """LU factorization hit an exactly zero pivot after pivoting."""


class ArgumentError(ValueError):
    """An argument value is outside its allowed domain."""


class ModelFormatError(ValueError):
    """Model document is malformed or missing required fields."""


class ModelShapeError(ValueError):
    """Model weights have inconsistent shapes."""


class BarrierDomainError(ValueError):
    """An input lies outside the open barrier interval."""


class NumericsError(ArithmeticError):
    """A numeric quantity became non-finite while solving."""


class DataError(ValueError):
    """Dataset does not satisfy the preconditions of a transform."""


class TrainingError(RuntimeError):
    """Training diverged or was configured inconsistently."""


class NormalizationWarning(UserWarning):
    """Network input lies outside the expected normalized range."""

"""Exception hierarchy shared by every metric_forge module."""


class MetricForgeError(Exception):
    """Base class for all library errors."""


class DimensionError(MetricForgeError, ValueError):
    """Inputs whose lengths or shapes do not agree."""


class InsufficientDataError(MetricForgeError, ValueError):
    """Too few points to run the requested computation."""


class PreconditionError(MetricForgeError, ValueError):
    """An operation was called outside its declared domain."""


class SeedRequiredError(MetricForgeError, ValueError):
    """A stochastic step was requested without a seed."""


class EvaluationError(MetricForgeError, ArithmeticError):
    """A kernel, family or integrand produced a non-finite value.

    ``context`` carries whatever identifies the offending evaluation
    (index point ``y``, arguments, matrix position ...).
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class UnsupportedOperationError(MetricForgeError, TypeError):
    pass


class DomainError(MetricForgeError, TypeError):
    """The point domain lacks the structure (e.g. subtraction) an operation needs."""


class BudgetExceededError(MetricForgeError, RuntimeError):
    pass


class CertificateError(MetricForgeError, ArithmeticError):
    """A value that a certificate guarantees to be nonnegative came out negative."""


class MatrixFormatError(MetricForgeError, ValueError):
    """Distance matrix that violates square/symmetric/nonnegative/zero-diagonal."""

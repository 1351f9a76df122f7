"""Exception hierarchy shared by all ddpce modules."""


class DDPCEError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(DDPCEError, ValueError):
    """Invalid parameter values or mismatched dimensions."""


class SampleParseError(DDPCEError, ValueError):
    """A sample CSV file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class RankDeficiencyError(DDPCEError, ValueError):
    """Too few distinct sample values for the requested polynomial degree."""

    def __init__(self, message, max_degree):
        super().__init__(message)
        self.max_degree = max_degree


class BasisTooLargeError(DDPCEError, ValueError):
    def __init__(self, n_terms, cap):
        super().__init__(
            f"basis too large: N={n_terms} terms exceeds the cap of {cap}"
        )
        self.n_terms = n_terms
        self.cap = cap


class IllConditionedDesignError(DDPCEError, ArithmeticError):
    """The empirical Gram matrix is not numerically positive definite."""

    def __init__(self, message, smallest_pivot=None):
        super().__init__(message)
        self.smallest_pivot = smallest_pivot


class UnderdeterminedSystemError(DDPCEError, ValueError):
    pass


class NumericRangeError(DDPCEError, ArithmeticError):
    pass


class UndefinedDeviationError(DDPCEError, ZeroDivisionError):
    pass

"""Exception hierarchy shared by every netblock module."""


class NetblockError(Exception):
    """Base class for all errors raised by netblock."""


class DataError(NetblockError):
    """Problems with the numbers a caller supplied (CLI exit code 3)."""


class ZeroVarianceError(DataError):
    def __init__(self, column=None, message=None):
        self.column = column
        if message is None:
            message = "column has zero sample variance"
            if column is not None:
                message = f"column {column} has zero sample variance"
        super().__init__(message)


class DimensionMismatchError(DataError):
    pass


class NotPositiveDefiniteError(DataError):
    def __init__(self, pivot, value=None):
        self.pivot = pivot
        self.value = value
        msg = f"matrix is not positive definite (pivot {pivot}"
        if value is not None:
            msg += f", value {value:.3g}"
        super().__init__(msg + ")")


class DomainError(NetblockError, ValueError):
    """An argument lies outside the domain where the formula is defined."""


class NoConvergenceError(NetblockError):
    pass


class InfeasibleError(NetblockError):
    pass


class IncompletePairSetError(NetblockError):
    pass


class EmptyInputError(NetblockError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {col})" if col is not None else ")")
        super().__init__(message + where)


class LayoutMismatchError(DataError):
    pass

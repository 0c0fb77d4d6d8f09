"""Exception types raised across the package."""


class ParmatchError(Exception):
    """Base class for all package errors."""


class FormatError(ParmatchError, ValueError):
    """A matrix file does not parse under its declared format."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateUnitError(ParmatchError, ValueError):
    """One or more unit columns are constant, so correlation is undefined."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"constant / zero-variance unit columns: {self.columns}")


class DimensionMismatch(ParmatchError, ValueError):
    pass


class NormalizationError(ParmatchError, ValueError):
    pass


class MassOutOfRange(ParmatchError, ValueError):
    pass


class GridError(ParmatchError, ValueError):
    pass


class ConfigError(ParmatchError, ValueError):
    pass


class EmptyMatchError(ParmatchError, ValueError):
    pass


class NumericalError(ParmatchError, RuntimeError):
    """The flow solver produced an infeasible or non-optimal result.

    This signals a bug in the solver rather than bad input.
    """

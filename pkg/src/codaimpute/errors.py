"""Exception and warning types raised across the package."""


class CodaError(ValueError):
    """Base class for every input or contract violation in this package."""


class DegenerateInput(CodaError):
    pass


class NegativeValue(CodaError):
    pass


class DimensionMismatch(CodaError):
    pass


class EmptyInput(CodaError):
    pass


class DegenerateRow(CodaError):
    def __init__(self, row, message="all observed parts are zero"):
        self.row = row
        super().__init__(f"row {row}: {message}")


class InconsistentRow(CodaError):
    def __init__(self, row, total):
        self.row = row
        self.total = total
        super().__init__(f"row {row}: observed parts sum to {total!r} > 1")


class MissingSetEmpty(CodaError):
    pass


class NoDonors(CodaError):
    def __init__(self, row):
        self.row = row
        super().__init__(f"row {row}: no complete row has a usable sub-vector")


class InsufficientDonors(CodaError):
    def __init__(self, row, available, k):
        self.row = row
        self.available = available
        self.k = k
        super().__init__(f"row {row}: {available} usable donors, k={k} requested")


class ZeroInLogRatio(CodaError):
    """A zero part reached a log-ratio computation (Aitchison geometry)."""

    def __init__(self, message="zero part in log-ratio computation", row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class AlphaZeroConflict(CodaError):
    pass


class InvalidResolution(CodaError):
    pass


class CvInfeasible(CodaError):
    pass


class MetricZeroConflict(CodaError):
    pass


class DegenerateSpec(CodaError):
    pass


class TooFewRows(CodaError):
    pass


class ParseError(CodaError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometricUndefined(UserWarning):
    """Closed geometric mean taken over data containing zero parts."""

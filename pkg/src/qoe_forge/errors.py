"""Exception hierarchy shared across the package."""


class QoeForgeError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(QoeForgeError, ValueError):
    """An argument value violates an operation's precondition."""


class SchemaMismatchError(QoeForgeError):
    """CSV or dataset columns do not match the declared schema."""


class CsvParseError(QoeForgeError):
    """A cell could not be parsed; carries 1-based data row and column name."""

    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")
        self.row = row
        self.column = column
        self.value = value


class RowValidationError(QoeForgeError):
    """One or more rows violate session invariants."""

    def __init__(self, failures: list[tuple[int, str]]):
        detail = "; ".join(f"row {r}: {msg}" for r, msg in failures)
        super().__init__(f"invalid rows: {detail}")
        self.failures = failures


class DegenerateInputError(QoeForgeError, ValueError):
    """Input would cause a division by zero in a factor formula."""


class UndefinedMetricError(QoeForgeError, ValueError):
    """Metric has a zero denominator (e.g. constant input vector)."""


class NumericalError(QoeForgeError):
    """A numerical solve failed (singular system, etc.)."""


class DivergenceError(QoeForgeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


class GraphShapeError(QoeForgeError, ValueError):
    """Incompatible operand shapes at graph construction."""

"""Exception hierarchy.

Errors fall into three families so the command line can map them to exit
codes: usage problems, data problems (parsing, cleaning, shapes) and numeric
failures (non-finite losses, singular regressions).
"""


class AqfError(Exception):
    """Base class for every error raised by the package."""


class UsageError(AqfError):
    """Bad arguments or configuration."""


class DataError(AqfError):
    """Input data cannot be parsed, cleaned or framed."""


class NumericError(AqfError):
    """A numerical procedure failed."""


# --- ingestion / cleaning
class MissingColumn(DataError):
    pass


class EmptyInput(DataError):
    pass


class BadTimestamp(DataError):
    def __init__(self, line: int, value: str):
        super().__init__(f"line {line}: cannot parse timestamp {value!r}")
        self.line = line
        self.value = value


class AllRowsDropped(DataError):
    pass


# --- preprocessing
class UnknownColumn(DataError):
    pass


class EmptyFrame(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class SeriesTooShort(DataError):
    pass


# --- statistics
class TooFewRows(DataError):
    pass


class ConstantSeries(DataError):
    pass


class SingularRegression(NumericError):
    pass


# --- aqi
class NegativeConcentration(DataError):
    pass


class UnknownPollutant(DataError):
    pass


class OutOfRange(DataError):
    pass


# --- neural engine
class NonFiniteValue(NumericError):
    pass


class NonFiniteLoss(NumericError):
    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class EmptySequence(DataError):
    pass


class StaleCache(AqfError):
    pass


class EmptyDataset(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptFile(DataError):
    pass


# --- metrics
class LengthMismatch(DataError):
    pass


# --- synthetic data
class BadSpec(UsageError):
    pass

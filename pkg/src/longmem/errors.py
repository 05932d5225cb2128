"""Exception types raised by the analysis routines.

Every error is a ``LongMemError`` (itself a ``ValueError``) so callers that
only care about "this input cannot be analysed" can catch one class.
"""


class LongMemError(ValueError):
    pass


# ingestion / series construction
class MalformedRow(LongMemError):
    def __init__(self, row: int, reason: str):
        self.row = row
        super().__init__(f"row {row}: {reason}")


class ZeroSize(LongMemError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: order size is zero, sign undefined")


class TooShort(LongMemError):
    pass


class LabelMismatch(LongMemError):
    pass


# estimators
class DegenerateSeries(LongMemError):
    pass


class LagOutOfRange(LongMemError):
    pass


class MixedLags(LongMemError):
    pass


class ZeroVariance(LongMemError):
    pass


class EmptyGrid(LongMemError):
    pass


class NonPositiveVariance(LongMemError):
    pass


class WindowTooLarge(LongMemError):
    pass


class InsufficientPoints(LongMemError):
    pass


class TooFewFrequencies(LongMemError):
    pass


class OutOfRange(LongMemError):
    pass


class SegmentTooShort(LongMemError):
    pass


# generators
class EmbeddingFailure(LongMemError):
    pass


class LongMemoryBase(LongMemError):
    pass


class IoFailure(LongMemError, OSError):
    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__(f"{path}: {reason}")

"""Exception hierarchy.

Data problems (bad files, gaps, misaligned ranges) derive from ``DataError``;
problems that only show up once a statistic is evaluated (constant inputs,
too few points) derive from ``StatisticalError``. The CLI maps the two
families to different exit codes.
"""


class SymptrendsError(Exception):
    """Base class for every error raised by this package."""


class DataError(SymptrendsError):
    pass


class StatisticalError(SymptrendsError):
    pass


# -- series ---------------------------------------------------------------

class DisjointRanges(DataError):
    pass


class TooShort(DataError):
    pass


class GapFound(DataError):
    pass


class DuplicateDate(DataError):
    pass


class UnsortedDates(DataError):
    pass


class RangeMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


# -- ingest ---------------------------------------------------------------

class MalformedHeader(DataError):
    pass


class NonNumericCell(DataError):
    pass


class ValueOutOfRange(DataError):
    pass


class MissingColumn(DataError):
    pass


class NegativeCount(DataError):
    pass


class UnparsableDate(DataError):
    pass


class DuplicateId(DataError):
    pass


class EmptyVariants(DataError):
    pass


class MalformedDocument(DataError):
    pass


class MissingVariant(DataError):
    """A manifest variant has no matching trend series."""


class IoFailure(DataError):
    pass


# -- stats ----------------------------------------------------------------

class ZeroVariance(StatisticalError):
    pass


class DegenerateRho(StatisticalError):
    """|rho| == 1, where the t statistic is infinite.

    Callers that want a number instead of an exception can read
    ``p_value`` (always 0.0).
    """

    p_value = 0.0


class TooFewSamples(StatisticalError):
    pass


class TooLarge(StatisticalError):
    pass


class NoValidLag(StatisticalError):
    pass


class WindowTooLarge(StatisticalError):
    pass

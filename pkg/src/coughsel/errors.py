"""Exception hierarchy.

Two families matter to callers: :class:`DataError` for bad inputs (files,
manifests, shapes) and :class:`NumericError` for solver/degeneracy failures.
The CLI maps them to exit codes 2 and 3.
"""


class CoughselError(Exception):
    """Base class for every error raised by this package."""

    # set by the pipeline when an error crosses a stage boundary
    stage = None


class DataError(CoughselError, ValueError):
    pass


class NumericError(CoughselError, ArithmeticError):
    pass


# audio / manifest
class MalformedWav(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class EmptyAudio(DataError):
    pass


class UnknownLabel(DataError):
    pass


class UnknownSplit(DataError):
    pass


class DuplicatePath(DataError):
    pass


class MissingColumn(DataError):
    pass


class MissingFile(DataError, FileNotFoundError):
    pass


# mfcc
class NegativeFrequency(DataError):
    pass


class ConfigInvalid(DataError):
    pass


class DegenerateBand(ConfigInvalid):
    pass


class ClipTooShort(DataError):
    pass


class TooFewFrames(DataError):
    pass


# shapes and selection
class DimensionMismatch(DataError):
    pass


class KOutOfRange(DataError):
    pass


class KExceedsRelevant(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class SingleClass(DataError):
    pass


# numeric
class DegenerateData(NumericError):
    pass


class ConstantTarget(NumericError):
    pass


class RankDeficient(NumericError):
    pass


class NoConvergence(NumericError):
    def __init__(self, message, gap=None, n_iter=None):
        super().__init__(message)
        self.gap = gap
        self.n_iter = n_iter


# persistence
class VersionMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass

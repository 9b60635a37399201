"""Exception hierarchy shared across the package.

Every holoproxy-specific failure derives from HoloproxyError so callers can
catch the whole family at API boundaries (the CLI maps them to exit codes).
"""

from __future__ import annotations


class HoloproxyError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset ingestion -------------------------------------------------------


class DatasetError(HoloproxyError):
    """Base class for CSV ingestion failures."""


class EmptyDataset(DatasetError):
    pass


class MissingCell(DatasetError):
    pass


class DuplicateCell(DatasetError):
    pass


class NonNumericValue(DatasetError):
    pass


class NonFiniteValue(DatasetError):
    pass


# --- interaction / model preconditions ---------------------------------------


class OutOfBoundsCell(HoloproxyError):
    pass


class OutOfBoundsIndex(HoloproxyError):
    pass


class DegenerateRange(HoloproxyError):
    """Value range with max <= min; no affine mapping exists."""


# --- wire protocol ------------------------------------------------------------


class FrameError(HoloproxyError):
    """Base class for frame encode/decode failures."""


class MalformedFrame(FrameError):
    pass


class IncompleteFrame(FrameError):
    """Frame is missing its newline terminator."""


class UnknownPayloadTag(FrameError):
    pass


class UnsupportedVersion(FrameError):
    pass


# --- server / replay ----------------------------------------------------------


class CorruptLog(HoloproxyError):
    """Replay log header or frame failed to parse."""


class DigestMismatch(HoloproxyError):
    """Replayed state digest disagrees with the digest recorded at log close."""


# --- scenarios ------------------------------------------------------------------


class ScenarioError(HoloproxyError):
    """Scenario file invalid or references out-of-bounds cells/indices."""


class AssertionFailed(HoloproxyError):
    """A scenario assertion did not hold after the run."""


class Timeout(HoloproxyError):
    """A scenario failed to reach quiescence within its budget."""

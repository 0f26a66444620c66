"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class VFEError(Exception):
    exit_code = 4


class UsageError(VFEError):
    exit_code = 2


class InvalidSpec(VFEError):
    exit_code = 2


class IoError(VFEError):
    exit_code = 3


# -- session files ---------------------------------------------------------

class SessionFormatError(VFEError):
    """Base for problems found while reading a session bundle."""

    def __init__(self, message, path=None, row=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if row is not None:
                where += f", row {row}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.row = row


class MissingFile(SessionFormatError):
    exit_code = 3


class SchemaViolation(SessionFormatError):
    pass


class NonMonotonicTimestamps(SessionFormatError):
    pass


class NonFiniteValue(SessionFormatError):
    pass


class NoTemporalOverlap(VFEError):
    pass


class RateTooLow(VFEError):
    pass


# -- signal processing -----------------------------------------------------

class SignalTooShort(VFEError):
    pass


class NoExtremaFound(VFEError):
    pass


class ZeroVariance(VFEError):
    pass


class ArraysTooShort(VFEError):
    pass


class LagAtSearchBoundary(VFEError):
    pass


class OverlappingSegments(VFEError):
    pass


class SegmentOutOfBounds(VFEError):
    pass


# -- features / model ------------------------------------------------------

class LengthMismatch(VFEError):
    pass


class DegenerateRange(VFEError):
    pass


class DegenerateColumn(VFEError):
    pass


class SingularSystem(VFEError):
    pass


class SchemaMismatch(VFEError):
    exit_code = 5


class SchemaVersionMismatch(VFEError):
    exit_code = 5


class CorruptFile(VFEError):
    exit_code = 5


class ZeroVarianceTarget(VFEError):
    pass


class SessionPipelineError(VFEError):
    """A pipeline failure attributed to one session."""

    def __init__(self, session_id, cause):
        super().__init__(f"session {session_id!r}: {type(cause).__name__}: {cause}")
        self.session_id = session_id
        self.cause = cause
        # keep the cause's exit status, so a missing file still reports as I/O
        self.exit_code = cause.exit_code

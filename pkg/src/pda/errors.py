"""Typed errors raised across the package.

Every failure mode surfaces as exactly one of these; the CLI maps them to
exit codes (data/schema problems -> 2, runtime/state problems -> 3).
"""


class PdaError(Exception):
    """Base class for all errors raised by this package."""


class NotFoundError(PdaError):
    """A required file or directory does not exist."""


class FormatError(PdaError):
    """An on-disk artifact is not in the supported binary/text format."""


class SchemaError(PdaError):
    """Arrays or records are structurally inconsistent (shapes, keys, ranges)."""


class DataError(PdaError):
    """Values are invalid: NaN/Inf entries, empty inputs, out-of-range labels."""


class IoError(PdaError):
    """Reading or writing an artifact failed at the OS level."""


class PreconditionError(PdaError):
    """An operation was invoked on inputs that violate its stated preconditions."""


class StateError(PdaError):
    """Computation cannot proceed from the current derived state."""


# Exit codes used by the command-line front end.
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_STATE = 3

_DATA_ERRORS = (NotFoundError, FormatError, SchemaError, DataError)
_STATE_ERRORS = (IoError, PreconditionError, StateError)


def exit_code_for(err: BaseException) -> int:
    """Exit code for a raised error, per the CLI contract."""
    if isinstance(err, _DATA_ERRORS):
        return EXIT_DATA
    if isinstance(err, _STATE_ERRORS + (OSError,)):
        return EXIT_STATE
    return EXIT_STATE

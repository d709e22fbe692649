"""Exception hierarchy for the toolkit.

Every failure mode the parser, codec, or backend can produce maps to a
distinct class so callers (and the CLI exit-code table) can tell them apart.
"""


class MscbError(Exception):
    """Base class for all toolkit errors."""


class FormatError(MscbError):
    """A byte stream violates the MSCB container format."""


class BadMagicError(FormatError):
    """Stream does not start with the MSCB magic."""


class UnsupportedVersionError(FormatError):
    """Container version is not understood by this implementation."""


class CrcMismatchError(FormatError):
    """Stored CRC-32 does not match the serialized bytes."""


class TruncatedError(FormatError):
    """Stream ends before a declared section is complete."""


class ConstraintError(FormatError):
    """A structural invariant is violated (J > 3, bad dims, word budgets...)."""


class BackendError(MscbError):
    """Base class for model-backend failures."""


class TransportError(BackendError):
    """Could not reach the remote backend, or it failed mid-request."""


class SchemaError(BackendError):
    """Backend returned data that does not match the wire schema."""

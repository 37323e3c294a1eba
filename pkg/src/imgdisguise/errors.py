"""Exception hierarchy shared across the package."""


class DisguiseError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidDimensionError(DisguiseError, ValueError):
    """A matrix dimension or element count is out of range."""


class PartitionError(DisguiseError, ValueError):
    """Image geometry is not divisible into the requested block grid."""


class GeometryMismatchError(DisguiseError, ValueError):
    """Image or dataset geometry does not match what an operation expects."""


class NotInvertibleError(DisguiseError, ValueError):
    """The key's matrix kind does not support inversion."""


class InvariantError(DisguiseError, ValueError):
    """A structural invariant is violated (broken bijection, label range, ...)."""


class FormatError(DisguiseError, ValueError):
    """Base class for malformed binary or text inputs."""


class BadMagicError(FormatError):
    """Input does not start with the expected magic bytes."""


class VersionError(FormatError):
    """Input declares a format version this code does not understand."""


class TruncatedError(FormatError):
    """Input ends before the declared payload is complete."""


class FramingError(FormatError):
    """Input length or declared dimensions are inconsistent with the record structure."""

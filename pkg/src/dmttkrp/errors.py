"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class BoundsError(IndexError):
    """An index or offset lies outside its valid range."""


class FormatError(ValueError):
    """A tensor file is malformed.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ResourceError(MemoryError):
    """A request would exceed the configured memory budget."""


class SizeGuardError(RuntimeError):
    """A brute-force reference was asked to run on a tensor that is too large."""

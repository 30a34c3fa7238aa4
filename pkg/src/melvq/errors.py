"""Exception types shared across the codec."""


class MelvqError(Exception):
    """Base class for codec errors."""


class FormatError(MelvqError):
    """Malformed, truncated, or unexpected container content."""


class HashMismatchError(MelvqError):
    """Stored digest does not match the recomputed digest."""


class SampleRateError(MelvqError):
    """Input audio does not satisfy the codec's sampling contract."""


class InsufficientDataError(MelvqError):
    """Not enough training material for the requested codebook size."""

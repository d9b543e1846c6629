"""Exception types raised across the index."""


class SentinelInInput(ValueError):
    """The raw text or a pattern contains the reserved sentinel byte."""


class OutOfRange(IndexError):
    pass


class Unbalanced(ValueError):
    pass


class NotOpen(ValueError):
    pass


class NoSuchChild(IndexError):
    pass


class MalformedLcp(ValueError):
    """LCP values that cannot belong to a sorted suffix block."""


class EmptyPattern(ValueError):
    pass


class PatternTooLong(ValueError):
    """Pattern exceeds the maximum length the global trie was built for."""


class DeliveryToInvalidPe(ValueError):
    pass


class FetchOutOfSlice(IndexError):
    """A remote read falls outside the padded slice held by the target PE."""


class LocalityViolation(RuntimeError):
    """A compute phase touched state owned by another PE (audit mode only)."""

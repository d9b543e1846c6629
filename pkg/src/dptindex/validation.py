"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers

from .exceptions import SentinelInInput
from .text import SENTINEL, Text, append_sentinel


def as_bytes(value, what: str = "input") -> bytes:
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value)
    raise TypeError(f"{what} must be str or bytes-like, got {type(value).__name__}")


def check_text(X) -> Text:
    """Coerce ``X`` to a sentinel-terminated Text."""
    if isinstance(X, Text):
        return X
    return append_sentinel(as_bytes(X, "text"))


def check_patterns(patterns, pmax: int | None = None) -> list[bytes]:
    """Coerce an iterable of patterns; a lone str/bytes is one pattern."""
    if isinstance(patterns, (str, bytes, bytearray, memoryview)):
        patterns = [patterns]
    out = []
    for k, p in enumerate(patterns):
        b = as_bytes(p, f"pattern {k}")
        if not b:
            raise ValueError(f"pattern {k} is empty")
        if SENTINEL in b:
            raise SentinelInInput(f"pattern {k} contains the sentinel byte")
        if pmax is not None and len(b) > pmax:
            raise ValueError(f"pattern {k} has length {len(b)} > pmax={pmax}")
        out.append(b)
    return out


def check_int(name: str, value, minimum: int = 0, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_choice(name: str, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {tuple(choices)}, got {value!r}")
    return value

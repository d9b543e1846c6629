"""Text handling, sequential suffix/LCP array construction and naive oracles.

Indexing convention (the only place conversions happen):

* Text positions are 1-based everywhere a position crosses a function
  boundary: ``T[1..n+1]`` with ``T[n+1]`` the sentinel.  ``Text.data`` is a
  plain ``bytes`` object, so ``T[i]`` is ``data[i - 1]``.
* Suffix and LCP arrays are numpy ``int64`` arrays indexed 0-based as Python
  sequences, holding 1-based values: ``sa[0]`` is ``SA[1]``.  ``lcp[0]`` is
  ``LCP[1] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import OutOfRange, SentinelInInput

SENTINEL = 0


@dataclass(frozen=True)
class Text:
    """A byte text terminated by a unique sentinel."""

    data: bytes

    @property
    def n(self) -> int:
        return len(self.data) - 1

    @property
    def size(self) -> int:
        """Length including the sentinel, ``n + 1``."""
        return len(self.data)

    def char(self, i: int) -> int:
        if not 1 <= i <= len(self.data):
            raise OutOfRange(f"text position {i} outside [1, {len(self.data)}]")
        return self.data[i - 1]

    def substring(self, i: int, length: int) -> bytes:
        """``T[i..i+length-1]``, sentinel-padded past the end of the text."""
        chunk = self.data[i - 1:i - 1 + length]
        if len(chunk) < length:
            chunk += bytes([SENTINEL]) * (length - len(chunk))
        return chunk

    def suffix(self, i: int) -> bytes:
        return self.data[i - 1:]


def append_sentinel(raw: bytes | bytearray | memoryview) -> Text:
    raw = bytes(raw)
    if SENTINEL in raw:
        raise SentinelInInput(
            f"byte {SENTINEL} is reserved as sentinel (first at offset {raw.index(SENTINEL)})")
    return Text(raw + bytes([SENTINEL]))


def build_suffix_array(t: Text) -> np.ndarray:
    """Prefix doubling on integer ranks; O(n log^2 n) but fully vectorized."""
    data = np.frombuffer(t.data, dtype=np.uint8)
    size = len(data)
    if size == 1:
        return np.ones(1, dtype=np.int64)
    rank = np.unique(data, return_inverse=True)[1].astype(np.int64).ravel()
    k = 1
    while True:
        second = np.zeros(size, dtype=np.int64)
        second[:size - k] = rank[k:] + 1
        key = rank * (size + 1) + second
        sa = np.argsort(key, kind="stable")
        skey = key[sa]
        new_rank = np.empty(size, dtype=np.int64)
        new_rank[sa] = np.concatenate(([0], np.cumsum(skey[1:] != skey[:-1])))
        rank = new_rank
        if rank[sa[-1]] == size - 1 or k >= size:
            break
        k *= 2
    return sa.astype(np.int64) + 1


def build_lcp_array(t: Text, sa: np.ndarray) -> np.ndarray:
    """Kasai et al.: walk the text in position order, reusing lcp - 1."""
    data = t.data
    size = len(data)
    sa0 = [int(x) - 1 for x in sa]
    rank = [0] * size
    for r, p in enumerate(sa0):
        rank[p] = r
    lcp = [0] * size
    h = 0
    for i in range(size):
        r = rank[i]
        if r == 0:
            h = 0
            continue
        j = sa0[r - 1]
        while i + h < size and j + h < size and data[i + h] == data[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.asarray(lcp, dtype=np.int64)


def lcp_pair(t: Text, i: int, j: int) -> int:
    """Length of the longest common prefix of suffixes ``S_i`` and ``S_j``."""
    data = t.data
    size = len(data)
    for pos in (i, j):
        if not 1 <= pos <= size:
            raise OutOfRange(f"text position {pos} outside [1, {size}]")
    a, b = i - 1, j - 1
    k = 0
    while a + k < size and b + k < size and data[a + k] == data[b + k]:
        k += 1
    return k


def naive_suffix_array(t: Text) -> np.ndarray:
    data = t.data
    order = sorted(range(len(data)), key=lambda i: data[i:])
    return np.asarray(order, dtype=np.int64) + 1


def naive_lcp_array(t: Text, sa: np.ndarray) -> np.ndarray:
    out = [0] * len(sa)
    for r in range(1, len(sa)):
        out[r] = lcp_pair(t, int(sa[r - 1]), int(sa[r]))
    return np.asarray(out, dtype=np.int64)


def naive_occurrences(t: Text, p: bytes) -> list[int]:
    """Sliding-window scan; the sentinel never matches since patterns exclude it."""
    data = t.data[:-1]
    m = len(p)
    return [i + 1 for i in range(len(data) - m + 1) if data[i:i + m] == p]

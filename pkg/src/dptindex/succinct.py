"""Bit vectors with rank/select/findclose and LOUDS, DFUDS and BP ordinal trees.

All public positions are 1-based and ``rank_b(i)`` counts ``bits[1..i]``
inclusive.  With that convention the level-order child formula
``select_0(rank_1(x) + i - 1) + 1`` is exact for every internal LOUDS node.

Node positions:

* LOUDS: a node is the position of the first bit of its unary degree run,
  the root is 1.  No super-root is prepended.
* DFUDS: same, after the prepended open bit; the root is 2.
* BP: a node is the position of its opening parenthesis; the root is 1.

Per-edge payload arrays are laid out in an encoding specific *edge order* so
that the edges of one node are contiguous where the encoding allows it:
LOUDS uses the level order of the child nodes, DFUDS the order of the 1-bits
(so the children of a node appear right-to-left), BP the preorder of the
child nodes.
"""

from __future__ import annotations

import struct
from bisect import bisect_left
from collections import deque

import numpy as np

from .exceptions import NoSuchChild, NotOpen, OutOfRange, Unbalanced

ENCODINGS = ("louds", "dfuds", "bp")

_SUPER = 512
_CHUNK_BYTES = 32
_INF = 1 << 60


def _byte_tables():
    pop = [bin(b).count("1") for b in range(256)]
    exc = [2 * pop[b] - 8 for b in range(256)]
    minp = []
    drop = []
    sel1 = []
    for b in range(256):
        cur, low = 0, 8
        first = [-1] * 9
        ones = []
        for k in range(8):
            if (b >> k) & 1:
                cur += 1
                ones.append(k)
            else:
                cur -= 1
            low = min(low, cur)
            if cur < 0 and first[-cur] == -1:
                first[-cur] = k
        minp.append(low)
        drop.append(first)
        sel1.append(ones)
    return pop, exc, minp, drop, sel1


_POP, _EXC, _MINP, _DROP, _SEL1 = _byte_tables()
_SEL0 = [_SEL1[255 ^ b] for b in range(256)]


class BitVector:
    """Static bit vector.

    Rank uses 512-bit superblocks (one cumulative count each) and popcounts on
    the superblock word.  Select bisects the superblock counts.  Forward
    excess search (``findclose``) uses a min-excess tree over 256-bit chunks,
    built on first use.
    """

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=np.uint8).ravel()
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        self._n = int(arr.size)
        packed = np.packbits(arr, bitorder="little")
        self._bytes = packed.tobytes()
        step = _SUPER // 8
        self._blocks = [int.from_bytes(self._bytes[k:k + step], "little")
                        for k in range(0, len(self._bytes), step)]
        nb = len(self._blocks)
        padded = np.zeros(nb * _SUPER, dtype=np.int64)
        padded[:self._n] = arr
        ones = padded.reshape(nb, _SUPER).sum(axis=1) if nb else np.zeros(0, np.int64)
        self._ones = [0] + np.cumsum(ones).tolist()
        self._zeros = [min(b * _SUPER, self._n) - self._ones[b] for b in range(nb + 1)]
        pat = np.zeros(nb * _SUPER, dtype=np.int64)
        if self._n > 1:
            pat[1:self._n] = (arr[:-1] == 1) & (arr[1:] == 0)
        self._pat = [0] + (np.cumsum(pat.reshape(nb, _SUPER).sum(axis=1)).tolist() if nb else [])
        self._carry = [0] + [int(arr[b * _SUPER - 1]) for b in range(1, nb)]
        self._tree = None

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i: int) -> int:
        if not 1 <= i <= self._n:
            raise OutOfRange(f"bit position {i} outside [1, {self._n}]")
        i -= 1
        return (self._bytes[i >> 3] >> (i & 7)) & 1

    def __eq__(self, other) -> bool:
        return isinstance(other, BitVector) and self._n == other._n and self._bytes == other._bytes

    def __hash__(self):
        return hash((self._n, self._bytes))

    def to_string(self) -> str:
        return "".join(str(self[i]) for i in range(1, self._n + 1))

    def to_array(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self._bytes, dtype=np.uint8),
                             bitorder="little")[:self._n]

    @property
    def ones(self) -> int:
        return self._ones[-1]

    # -- rank ---------------------------------------------------------------
    def _rank1(self, i: int) -> int:
        b, off = divmod(i, _SUPER)
        r = self._ones[b]
        if off:
            r += (self._blocks[b] & ((1 << off) - 1)).bit_count()
        return r

    def _rank10(self, i: int) -> int:
        """Number of ``10`` patterns whose 0 lies in ``bits[1..i]``."""
        b, off = divmod(i, _SUPER)
        r = self._pat[b]
        if off:
            s = self._blocks[b]
            m = ((s << 1) | self._carry[b]) & ~s & ((1 << off) - 1)
            r += m.bit_count()
        return r

    def rank(self, b: int, i: int) -> int:
        if not 1 <= i <= self._n:
            raise OutOfRange(f"rank position {i} outside [1, {self._n}]")
        r1 = self._rank1(i)
        return r1 if b else i - r1

    def rank10(self, i: int) -> int:
        if not 0 <= i <= self._n:
            raise OutOfRange(f"rank position {i} outside [0, {self._n}]")
        return self._rank10(i)

    # -- select -------------------------------------------------------------
    def _select(self, b: int, j: int) -> int:
        cum = self._ones if b else self._zeros
        blk = bisect_left(cum, j) - 1
        k = j - cum[blk]
        s = self._blocks[blk]
        if not b:
            width = min(_SUPER, self._n - blk * _SUPER)
            s = ~s & ((1 << width) - 1)
        table = _SEL1
        base = blk * _SUPER
        while True:
            byte = s & 0xFF
            c = _POP[byte]
            if k <= c:
                return base + table[byte][k - 1] + 1
            k -= c
            s >>= 8
            base += 8

    def select(self, b: int, j: int) -> int:
        total = self._ones[-1] if b else self._n - self._ones[-1]
        if not 1 <= j <= total:
            raise OutOfRange(f"select_{b}({j}) with only {total} such bits")
        return self._select(b, j)

    # -- balanced parentheses -------------------------------------------------
    def excess(self, i: int) -> int:
        return 2 * self._rank1(i) - i

    def _build_tree(self) -> None:
        raw = np.frombuffer(self._bytes, dtype=np.uint8)
        nchunks = max(1, -(-len(raw) // _CHUNK_BYTES))
        exc = np.zeros(nchunks * _CHUNK_BYTES, dtype=np.int64)
        mnp = np.full(nchunks * _CHUNK_BYTES, _INF, dtype=np.int64)
        exc[:len(raw)] = np.asarray(_EXC, dtype=np.int64)[raw]
        mnp[:len(raw)] = np.asarray(_MINP, dtype=np.int64)[raw]
        exc = exc.reshape(nchunks, _CHUNK_BYTES)
        mnp = mnp.reshape(nchunks, _CHUNK_BYTES)
        before = np.cumsum(exc, axis=1) - exc
        totals = exc.sum(axis=1)
        base = np.concatenate(([0], np.cumsum(totals)[:-1]))
        mins = (mnp + before).min(axis=1) + base
        size = 1
        while size < nchunks:
            size *= 2
        tree = [_INF] * (2 * size)
        tree[size:size + nchunks] = mins.tolist()
        for k in range(size - 1, 0, -1):
            tree[k] = min(tree[2 * k], tree[2 * k + 1])
        self._tree = tree
        self._tsize = size
        self._chunk_base = base.tolist()

    def _first_chunk_leq(self, start: int, target: int) -> int:
        size, tree = self._tsize, self._tree
        if start >= size:
            return -1
        k = start + size
        while tree[k] > target:
            while k & 1:
                k >>= 1
            if k == 0:
                return -1
            k += 1
        while k < size:
            k = 2 * k if tree[2 * k] <= target else 2 * k + 1
        return k - size

    def _scan_bytes(self, byte_idx: int, stop: int, cur: int, target: int):
        data = self._bytes
        stop = min(stop, len(data))
        for bi in range(byte_idx, stop):
            byte = data[bi]
            if cur + _MINP[byte] <= target:
                return bi * 8 + _DROP[byte][cur - target], cur
            cur += _EXC[byte]
        return -1, cur

    def fwd_search(self, i: int, d: int) -> int:
        """Smallest ``j > i`` with ``excess(j) = excess(i) + d`` for ``d < 0``."""
        if d >= 0:
            raise ValueError("only backward-closing searches (d < 0) are supported")
        if not 0 <= i <= self._n:
            raise OutOfRange(f"position {i} outside [0, {self._n}]")
        if self._tree is None:
            self._build_tree()
        cur = self.excess(i)
        target = cur + d
        idx = i
        data = self._bytes
        while idx < self._n and idx & 7:
            cur += 1 if (data[idx >> 3] >> (idx & 7)) & 1 else -1
            idx += 1
            if cur == target:
                return idx
        if idx < self._n:
            bi = idx >> 3
            chunk_end = (bi // _CHUNK_BYTES + 1) * _CHUNK_BYTES
            j, cur = self._scan_bytes(bi, chunk_end, cur, target)
            if j >= 0:
                return self._checked(j)
            chunk = bi // _CHUNK_BYTES + 1
        else:
            chunk = self._tsize
        w = self._first_chunk_leq(chunk, target)
        if w < 0:
            raise Unbalanced(f"no position after {i} reaches excess {target}")
        j, _ = self._scan_bytes(w * _CHUNK_BYTES, (w + 1) * _CHUNK_BYTES,
                                self._chunk_base[w], target)
        return self._checked(j)

    def _checked(self, j: int) -> int:
        # j is 0-based; padding bits past the end must not produce a match
        if j < 0 or j >= self._n:
            raise Unbalanced("matching position lies beyond the end of the sequence")
        return j + 1

    def findclose(self, i: int) -> int:
        if self[i] != 1:
            raise NotOpen(f"position {i} is not an open parenthesis")
        return self.fwd_search(i, -1)

    # -- accounting ---------------------------------------------------------
    def support_bits(self) -> int:
        """Bits of auxiliary structures: superblock counts plus the excess tree."""
        nb = len(self._blocks)
        bits = 2 * 64 * (nb + 1)
        if self._tree is not None:
            bits += 32 * len(self._tree) + 64 * len(self._chunk_base)
        return bits

    def to_bytes(self) -> bytes:
        words = -(-self._n // 64)
        payload = self._bytes + bytes(words * 8 - len(self._bytes))
        return struct.pack("<Q", self._n) + payload

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0):
        (n,) = struct.unpack_from("<Q", buf, offset)
        words = -(-n // 64)
        start = offset + 8
        raw = np.frombuffer(buf, dtype=np.uint8, count=words * 8, offset=start)
        bits = np.unpackbits(raw, bitorder="little")[:n]
        return cls(bits), start + words * 8


class PointerTree:
    """Rooted ordered tree stored as child lists; node 0 is the root."""

    def __init__(self, children: list[list[int]]):
        self.children = children

    @classmethod
    def from_preorder_degrees(cls, degrees) -> "PointerTree":
        n = len(degrees)
        children: list[list[int]] = [[] for _ in range(n)]
        stack: list[int] = []
        for u in range(n):
            if stack:
                parent = stack[-1]
                children[parent].append(u)
                if len(children[parent]) == degrees[parent]:
                    stack.pop()
            if degrees[u]:
                stack.append(u)
        return cls(children)

    def __len__(self) -> int:
        return len(self.children)

    def outdegree(self, u: int) -> int:
        return len(self.children[u])

    def child(self, u: int, i: int) -> int:
        kids = self.children[u]
        if not 1 <= i <= len(kids):
            raise NoSuchChild(f"node {u} has {len(kids)} children, asked for {i}")
        return kids[i - 1]

    def preorder(self) -> list[int]:
        out = []
        stack = [0]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(reversed(self.children[u]))
        return out

    def level_order(self) -> list[int]:
        out = []
        queue = deque([0])
        while queue:
            u = queue.popleft()
            out.append(u)
            queue.extend(self.children[u])
        return out

    def shape(self):
        """Canonical nested-tuple shape, for structural comparison."""
        memo = {}
        for u in reversed(self.preorder()):
            memo[u] = tuple(memo[v] for v in self.children[u])
        return memo[0]


class SuccinctTree:
    """An ordinal tree over one bit vector under a fixed encoding."""

    def __init__(self, encoding: str, bv: BitVector, node_count: int):
        if encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {encoding!r}")
        self.encoding = encoding
        self.bv = bv
        self.node_count = node_count
        self.order = None
        # DFUDS: the prepended open bit followed by a leaf root forms a
        # spurious ``10`` pattern at position 2
        self._root_leaf_pattern = encoding == "dfuds" and node_count == 1

    def __eq__(self, other):
        return (isinstance(other, SuccinctTree) and self.encoding == other.encoding
                and self.node_count == other.node_count and self.bv == other.bv)

    def root(self) -> int:
        return 2 if self.encoding == "dfuds" else 1

    def is_leaf(self, x: int) -> bool:
        if self.encoding == "bp":
            return self.bv[x + 1] == 0
        return self.bv[x] == 0

    def outdegree(self, x: int) -> int:
        bv = self.bv
        if self.encoding == "bp":
            d = 0
            y = x + 1
            while y <= len(bv) and bv[y] == 1:
                d += 1
                y = bv.fwd_search(y, -1) + 1
            return d
        if bv[x] == 0:
            return 0
        return bv._select(0, (x - 1 - bv._rank1(x - 1)) + 1) - x

    def child(self, x: int, i: int) -> int:
        bv = self.bv
        if self.encoding == "bp":
            if i < 1:
                raise NoSuchChild(f"child index {i} < 1")
            y = x + 1
            for _ in range(i - 1):
                if bv[y] != 1:
                    break
                y = bv.fwd_search(y, -1) + 1
            if y > len(bv) or bv[y] != 1:
                raise NoSuchChild(f"node {x} has fewer than {i} children")
            return y
        d = self.outdegree(x)
        if not 1 <= i <= d:
            raise NoSuchChild(f"node {x} has {d} children, asked for {i}")
        if self.encoding == "louds":
            return bv._select(0, bv._rank1(x) + i - 1) + 1
        return bv.fwd_search(x + d - i, -1) + 1

    def children(self, x: int) -> list[int]:
        if self.encoding == "bp":
            out = []
            y = x + 1
            bv = self.bv
            while y <= len(bv) and bv[y] == 1:
                out.append(y)
                y = bv.fwd_search(y, -1) + 1
            return out
        return [self.child(x, i) for i in range(1, self.outdegree(x) + 1)]

    def node_id(self, x: int) -> int:
        """Canonical 0-based node number: level order for LOUDS, preorder otherwise."""
        if self.encoding == "bp":
            return self.bv._rank1(x) - 1
        return (x - 1) - self.bv._rank1(x - 1)

    def position(self, k: int) -> int:
        if self.encoding == "bp":
            return self.bv._select(1, k + 1)
        if k == 0:
            return self.root()
        return self.bv._select(0, k) + 1

    def edge_index(self, x: int, i: int, d: int | None = None) -> int:
        """Index of the edge to the ``i``-th child of ``x`` in edge order."""
        if self.encoding == "louds":
            return self.bv._rank1(x) - 1 + (i - 1)
        if self.encoding == "dfuds":
            if d is None:
                d = self.outdegree(x)
            return self.bv._rank1(x + d - i) - 2
        return self.node_id(self.child(x, i)) - 1

    def _leaves_upto(self, p: int) -> int:
        """Leaves whose description ends at or before position ``p``."""
        bv = self.bv
        if self.encoding == "bp":
            return bv._rank10(p)
        pat = bv._rank10(p)
        if self._root_leaf_pattern and p >= 2:
            pat -= 1
        return (p - bv._rank1(p)) - pat

    def leaves_before(self, x: int) -> int:
        """Leaf rank of ``x`` (left-to-right for BP/DFUDS, level order for LOUDS)."""
        if self.encoding == "bp":
            return self.bv._rank10(x)
        return self._leaves_upto(x - 1)

    def subtree_end(self, x: int) -> int:
        if self.encoding == "louds":
            raise NotImplementedError("LOUDS has no contiguous subtrees")
        if self.encoding == "bp":
            return self.bv.fwd_search(x, -1)
        return self.bv.fwd_search(x - 1, -1)

    def leaf_range(self, x: int) -> tuple[int, int]:
        """0-based left-to-right ranks of the first and last leaf below ``x``."""
        lo = self.leaves_before(x)
        hi = self._leaves_upto(self.subtree_end(x)) - 1
        return lo, hi

    def to_pointer(self) -> PointerTree:
        """Decode by navigation; nodes are numbered in canonical order."""
        children: list[list[int]] = [[] for _ in range(self.node_count)]
        queue = deque([self.root()])
        while queue:
            x = queue.popleft()
            u = self.node_id(x)
            for y in self.children(x):
                children[u].append(self.node_id(y))
                queue.append(y)
        return PointerTree(children)

    def structure_bits(self) -> int:
        return len(self.bv) + self.bv.support_bits()

    def to_bytes(self) -> bytes:
        tag = ENCODINGS.index(self.encoding)
        return struct.pack("<BQ", tag, self.node_count) + self.bv.to_bytes()

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0):
        tag, count = struct.unpack_from("<BQ", buf, offset)
        bv, end = BitVector.from_bytes(buf, offset + 9)
        return cls(ENCODINGS[tag], bv, count), end


def louds_bits(tree: PointerTree):
    order = tree.level_order()
    degrees = np.fromiter((len(tree.children[u]) for u in order), dtype=np.int64, count=len(order))
    return _unary_bits(degrees, prefix=0), order


def dfuds_bits(tree: PointerTree):
    order = tree.preorder()
    degrees = np.fromiter((len(tree.children[u]) for u in order), dtype=np.int64, count=len(order))
    return _unary_bits(degrees, prefix=1), order


def _unary_bits(degrees: np.ndarray, prefix: int) -> np.ndarray:
    total = prefix + int(degrees.sum()) + len(degrees)
    bits = np.ones(total, dtype=np.uint8)
    zeros = prefix + np.cumsum(degrees + 1) - 1
    bits[zeros] = 0
    return bits


def bp_bits(tree: PointerTree):
    bits = bytearray()
    order = []
    stack = [0]
    children = tree.children
    while stack:
        u = stack.pop()
        if u < 0:
            bits.append(0)
            continue
        bits.append(1)
        order.append(u)
        stack.append(~u)
        stack.extend(reversed(children[u]))
    return np.frombuffer(bytes(bits), dtype=np.uint8), order


def encode(tree: PointerTree, encoding: str) -> SuccinctTree:
    """Encode ``tree``; ``result.order[k]`` is the pointer node with canonical number ``k``."""
    builders = {"louds": louds_bits, "dfuds": dfuds_bits, "bp": bp_bits}
    if encoding not in builders:
        raise ValueError(f"unknown encoding {encoding!r}")
    bits, order = builders[encoding](tree)
    st = SuccinctTree(encoding, BitVector(bits), len(tree))
    st.order = np.asarray(order, dtype=np.int64)
    return st

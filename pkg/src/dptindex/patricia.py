"""Local Patricia tries over one block of the suffix array.

Construction scans ``(sa_block, lcp_block)`` once with a stack holding the
inner nodes of the rightmost path.  Topology never needs text characters;
the first character of every edge is recorded as a text position and
resolved afterwards through a char provider (in the simulator, DRMA reads).

Four backings share one navigation contract: ``pointer`` (CSR arrays in
preorder), ``louds``, ``dfuds`` and ``bp``.
"""

from __future__ import annotations

import math
import struct
from array import array
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .exceptions import MalformedLcp
from .succinct import BitVector, PointerTree, SuccinctTree, encode
from .text import Text

BACKINGS = ("pointer", "louds", "dfuds", "bp")

MATCHED = "Matched"
NO_EDGE = "NoEdge"


class LocalCharProvider:
    """Resolves text positions against an in-memory text and logs every request."""

    def __init__(self, text: Text):
        self._data = np.frombuffer(text.data, dtype=np.uint8)
        self.size = text.size
        self.requests: list[int] = []

    def fetch(self, positions) -> bytes:
        pos = np.asarray(positions, dtype=np.int64)
        self.requests.extend(pos.tolist())
        return self._data[pos - 1].tobytes()


@dataclass
class TrieShape:
    """Preorder skeleton of a Patricia trie before labels are resolved.

    ``label_pos[u]`` is the text position of the first character on the edge
    into ``u`` (0 for the root); ``leaf_rank[u]`` is -1 for inner nodes.
    """

    degrees: np.ndarray
    depths: np.ndarray
    label_pos: np.ndarray
    leaf_rank: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.degrees)


@dataclass
class BlindSearchResult:
    outcome: str
    witness: int = 0
    leaf_range: tuple[int, int] = (0, -1)
    node: int = field(default=-1, compare=False)
    steps: int = field(default=0, compare=False)

    @property
    def matched(self) -> bool:
        return self.outcome == MATCHED


def _check_block(sa_block, lcp_block):
    sa = [int(x) for x in sa_block]
    lcp = [int(x) for x in lcp_block]
    if not sa or len(sa) != len(lcp):
        raise MalformedLcp(f"sa/lcp blocks must be non-empty and of equal length "
                           f"(got {len(sa)} and {len(lcp)})")
    return sa, lcp


def build_shape(sa_block, lcp_block, text_size: int) -> TrieShape:
    """Left-to-right stack construction; ``lcp_block[0]`` (the seam) is ignored."""
    sa, lcp = _check_block(sa_block, lcp_block)
    end = text_size + 1
    depth = [0, end - sa[0]]
    lpos = [0, sa[0]]
    kids: list = [[1], None]
    leaf = [-1, 0]
    stack = [0]
    for i in range(1, len(sa)):
        L = lcp[i]
        p = sa[i]
        prev = sa[i - 1]
        if L < 0 or L >= end - p or L >= end - prev:
            raise MalformedLcp(f"lcp[{i}]={L} impossible for suffixes {prev} and {p}")
        top = stack[-1]
        while depth[top] > L:
            stack.pop()
            top = stack[-1]
        if depth[top] < L:
            c = kids[top][-1]
            if depth[c] <= L:
                raise MalformedLcp(f"lcp[{i}]={L} contradicts the sort order")
            w = len(depth)
            depth.append(L)
            lpos.append(lpos[c])
            lpos[c] = prev + L
            kids.append([c])
            leaf.append(-1)
            kids[top][-1] = w
            stack.append(w)
            top = w
        u = len(depth)
        depth.append(end - p)
        lpos.append(p + L)
        kids.append(None)
        leaf.append(i)
        kids[top].append(u)

    root = 0
    if len(sa) > 1 and len(kids[0]) == 1:
        root = kids[0][0]

    order = []
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        ch = kids[u]
        if ch:
            stack.extend(reversed(ch))
    degrees = np.fromiter((len(kids[u]) if kids[u] else 0 for u in order), np.int64, len(order))
    o = np.asarray(order, dtype=np.int64)
    lp = np.asarray(lpos, dtype=np.int64)[o]
    lp[0] = 0
    return TrieShape(degrees, np.asarray(depth, dtype=np.int64)[o], lp,
                     np.asarray(leaf, dtype=np.int64)[o])


def stream_dfuds(sa_block, lcp_block, text_size: int):
    """Emit DFUDS directly during the scan.

    A popped node is final; it is turned into a chunk of (degree, depth,
    right-to-left child label positions) records followed by its children's
    chunks, and no node object survives.  Leaves are final on creation.
    Returns ``(bits, depths, edge_label_positions)`` with depths in preorder
    and label positions in DFUDS edge order.
    """
    sa, lcp = _check_block(sa_block, lcp_block)
    end = text_size + 1
    # stack record: [depth, items, child_label_positions]
    stack = [[0, [(end - sa[0],)], [sa[0]]]]

    def close(rec):
        return [(len(rec[1]), rec[0], rec[2][::-1])] + rec[1]

    for i in range(1, len(sa)):
        L = lcp[i]
        p = sa[i]
        prev = sa[i - 1]
        if L < 0 or L >= end - p or L >= end - prev:
            raise MalformedLcp(f"lcp[{i}]={L} impossible for suffixes {prev} and {p}")
        popped = None
        while stack[-1][0] > L:
            popped = stack.pop()
            stack[-1][1][-1] = close(popped)
        top = stack[-1]
        if top[0] < L:
            last = top[1][-1]
            last_depth = popped[0] if popped is not None else last[0]
            if last_depth <= L:
                raise MalformedLcp(f"lcp[{i}]={L} contradicts the sort order")
            w = [L, [last], [prev + L]]
            top[1][-1] = None
            stack.append(w)
            top = w
        top[1].append((end - p,))
        top[2].append(p + L)
    while len(stack) > 1:
        rec = stack.pop()
        stack[-1][1][-1] = close(rec)
    root = stack[0]
    if len(sa) > 1 and len(root[1]) == 1:
        chunk = root[1][0]
    else:
        chunk = close(root)

    bits = bytearray([1])
    depths = []
    labels = []
    todo = [iter(chunk)]
    while todo:
        item = next(todo[-1], StopIteration)
        if item is StopIteration:
            todo.pop()
            continue
        if isinstance(item, list):
            todo.append(iter(item))
        elif len(item) == 1:
            bits.append(0)
            depths.append(item[0])
        else:
            d, dep, labs = item
            bits.extend(b"\x01" * d)
            bits.append(0)
            depths.append(dep)
            labels.extend(labs)
    return (np.frombuffer(bytes(bits), dtype=np.uint8),
            np.asarray(depths, dtype=np.int64), np.asarray(labels, dtype=np.int64))


def _iarray(values) -> array:
    out = array("q")
    out.frombytes(np.ascontiguousarray(values, dtype=np.int64).tobytes())
    return out


class PatriciaTrie:
    """Navigation contract shared by all backings.

    ``sa_block`` is the PE-resident suffix array block; leaves refer to it by
    rank.  ``block_meta`` is ``(pe_id, block_start, block_len)`` with
    ``block_start`` the 1-based global SA index of the first entry.
    """

    backing = ""

    def __init__(self, depths, chars: bytes, sa_block, block_meta, text_size: int):
        self.depths = _iarray(depths)
        self.chars = bytes(chars)
        self.sa_block = np.asarray(sa_block, dtype=np.int64)
        self.block_meta = tuple(int(v) for v in block_meta)
        self.text_size = text_size

    # backing specific
    def root(self) -> int:
        raise NotImplementedError

    def depth(self, x: int) -> int:
        raise NotImplementedError

    def is_leaf(self, x: int) -> bool:
        raise NotImplementedError

    def find_child(self, x: int, ch: int):
        raise NotImplementedError

    def leaf_range(self, x: int) -> tuple[int, int]:
        raise NotImplementedError

    def _tree_bits(self) -> int:
        raise NotImplementedError

    @property
    def node_count(self) -> int:
        return len(self.depths)

    @property
    def leaf_count(self) -> int:
        return len(self.sa_block)

    @property
    def root_depth(self) -> int:
        return self.depth(self.root())

    def blind_search(self, p: bytes) -> BlindSearchResult:
        """Descend by branching characters only; never reads the text."""
        x = self.root()
        m = len(p)
        steps = 0
        while True:
            d = self.depth(x)
            if d >= m:
                break
            steps += 1
            if self.is_leaf(x):
                return BlindSearchResult(NO_EDGE, node=x, steps=steps)
            y = self.find_child(x, p[d])
            if y is None:
                return BlindSearchResult(NO_EDGE, node=x, steps=steps)
            x = y
        lo, hi = self.leaf_range(x)
        return BlindSearchResult(MATCHED, int(self.sa_block[lo]), (lo, hi), node=x,
                                 steps=steps + 1)

    def size_report(self, pos_width: int = 40) -> dict:
        """Bits held by this trie, by component; SA bits are listed separately."""
        nodes = self.node_count
        depth_width = pos_width if self.backing == "pointer" else \
            max(1, math.ceil(math.log2(self.text_size + 1)))
        report = {
            "tree_bits": self._tree_bits(),
            "depth_bits": nodes * depth_width,
            "label_bits": 8 * len(self.chars),
            "leaf_bits": self._leaf_bits(pos_width),
        }
        report["trie_bits"] = sum(report.values())
        report["sa_bits"] = self.leaf_count * pos_width
        return report

    def _leaf_bits(self, pos_width: int) -> int:
        return 0

    # serialization ------------------------------------------------------
    def _tree_record(self) -> bytes:
        raise NotImplementedError

    def _extra_record(self) -> bytes:
        return b""

    def to_bytes(self) -> bytes:
        tag = BACKINGS.index(self.backing)
        head = struct.pack("<BIQQQ", tag, *self.block_meta, self.text_size)
        depths = np.asarray(self.depths, dtype="<i8").tobytes()
        parts = [head, self._tree_record(),
                 struct.pack("<Q", len(self.depths)), depths,
                 struct.pack("<Q", len(self.chars)), self.chars,
                 self._extra_record()]
        return b"".join(parts)


class PointerPatricia(PatriciaTrie):
    """CSR arrays in preorder: ``start[u]..start[u+1]`` index ``kids``/``chars``."""

    backing = "pointer"

    def __init__(self, degrees, depths, chars, leaf_rank, sa_block, block_meta, text_size):
        degrees = np.asarray(degrees, dtype=np.int64)
        tree = PointerTree.from_preorder_degrees(degrees.tolist())
        kids = [v for ch in tree.children for v in ch]
        edge_chars = bytes(chars[v - 1] for v in kids) if kids else b""
        super().__init__(depths, edge_chars, sa_block, block_meta, text_size)
        self.start = _iarray(np.concatenate(([0], np.cumsum(degrees))))
        self.kids = _iarray(np.asarray(kids, dtype=np.int64))
        self.leaf_rank = _iarray(leaf_rank)

    def root(self):
        return 0

    def depth(self, x):
        return self.depths[x]

    def is_leaf(self, x):
        return self.start[x] == self.start[x + 1]

    def find_child(self, x, ch):
        lo, hi = self.start[x], self.start[x + 1]
        k = bisect_left(self.chars, ch, lo, hi)
        if k < hi and self.chars[k] == ch:
            return self.kids[k]
        return None

    def leaf_range(self, x):
        start, kids = self.start, self.kids
        a = b = x
        while start[a] != start[a + 1]:
            a = kids[start[a]]
        while start[b] != start[b + 1]:
            b = kids[start[b + 1] - 1]
        return self.leaf_rank[a], self.leaf_rank[b]

    def degrees(self) -> np.ndarray:
        s = np.frombuffer(self.start, dtype=np.int64)
        return np.diff(s)

    def _tree_bits(self):
        return 64 * (len(self.start) + len(self.kids))

    def _leaf_bits(self, pos_width):
        return pos_width * self.node_count

    def _tree_record(self):
        tree = PointerTree.from_preorder_degrees(self.degrees().tolist())
        return encode(tree, "bp").to_bytes()

    def preorder_chars(self) -> bytes:
        out = bytearray(max(0, self.node_count - 1))
        for k, v in enumerate(self.kids):
            out[v - 1] = self.chars[k]
        return bytes(out)


class _SuccinctPatricia(PatriciaTrie):
    def __init__(self, tree: SuccinctTree, depths, chars, sa_block, block_meta, text_size):
        super().__init__(depths, chars, sa_block, block_meta, text_size)
        self.tree = tree
        self.bv = tree.bv

    def root(self):
        return self.tree.root()

    def depth(self, x):
        return self.depths[self.tree.node_id(x)]

    def is_leaf(self, x):
        return self.tree.is_leaf(x)

    def _tree_bits(self):
        return self.tree.structure_bits()

    def _tree_record(self):
        return self.tree.to_bytes()


class LoudsPatricia(_SuccinctPatricia):
    """Level-order backing; leaf ranks are stored since leaves are not contiguous."""

    backing = "louds"

    def __init__(self, tree, depths, chars, leaf_ranks, sa_block, block_meta, text_size):
        super().__init__(tree, depths, chars, sa_block, block_meta, text_size)
        self.leaf_ranks = _iarray(leaf_ranks)

    def find_child(self, x, ch):
        bv = self.bv
        if bv[x] == 0:
            return None
        d = bv._select(0, (x - 1 - bv._rank1(x - 1)) + 1) - x
        base = bv._rank1(x) - 1
        k = bisect_left(self.chars, ch, base, base + d)
        if k < base + d and self.chars[k] == ch:
            return bv._select(0, k + 1) + 1
        return None

    def _descend(self, x, last: bool):
        tree = self.tree
        while not tree.is_leaf(x):
            x = tree.child(x, tree.outdegree(x) if last else 1)
        return self.leaf_ranks[tree.leaves_before(x)]

    def leaf_range(self, x):
        return self._descend(x, False), self._descend(x, True)

    def _leaf_bits(self, pos_width):
        return len(self.leaf_ranks) * max(1, math.ceil(math.log2(self.leaf_count + 1)))

    def _extra_record(self):
        return struct.pack("<Q", len(self.leaf_ranks)) + \
            np.asarray(self.leaf_ranks, dtype="<i8").tobytes()


class DfudsPatricia(_SuccinctPatricia):
    backing = "dfuds"

    def find_child(self, x, ch):
        bv = self.bv
        if bv[x] == 0:
            return None
        ones_before = bv._rank1(x - 1)
        d = bv._select(0, (x - 1 - ones_before) + 1) - x
        e0 = ones_before - 1
        chars = self.chars
        # edge e0 + k leads to child d - k, so chars descend with k
        lo, hi = 0, d - 1
        while lo <= hi:
            mid = (lo + hi) >> 1
            c = chars[e0 + mid]
            if c == ch:
                return bv.fwd_search(x + mid, -1) + 1
            if c > ch:
                lo = mid + 1
            else:
                hi = mid - 1
        return None

    def leaf_range(self, x):
        return self.tree.leaf_range(x)


class BpPatricia(_SuccinctPatricia):
    """Children are reached by sibling walks, O(outdegree) per node."""

    backing = "bp"

    def find_child(self, x, ch):
        bv = self.bv
        y = x + 1
        n = len(bv)
        while y <= n and bv[y] == 1:
            c = self.chars[bv._rank1(y) - 2]
            if c == ch:
                return y
            if c > ch:
                return None
            y = bv.fwd_search(y, -1) + 1
        return None

    def leaf_range(self, x):
        return self.tree.leaf_range(x)


def from_shape(shape: TrieShape, chars: bytes, backing: str, sa_block, block_meta,
               text_size: int) -> PatriciaTrie:
    """Materialize a backing; ``chars[u - 1]`` labels the edge into preorder node ``u``."""
    if backing not in BACKINGS:
        raise ValueError(f"unknown backing {backing!r}; expected one of {BACKINGS}")
    if backing == "pointer":
        return PointerPatricia(shape.degrees, shape.depths, chars, shape.leaf_rank,
                               sa_block, block_meta, text_size)
    tree = encode(PointerTree.from_preorder_degrees(shape.degrees.tolist()), backing)
    order = tree.order
    depths = shape.depths[order]
    ch = np.frombuffer(chars, dtype=np.uint8)
    if backing == "louds":
        edge_chars = ch[order[1:] - 1].tobytes()
        leaf_ranks = [r for r in shape.leaf_rank[order].tolist() if r >= 0]
        return LoudsPatricia(tree, depths, edge_chars, leaf_ranks, sa_block, block_meta,
                             text_size)
    if backing == "dfuds":
        edges = dfuds_edge_nodes(shape.degrees)
        return DfudsPatricia(tree, depths, ch[edges - 1].tobytes(), sa_block, block_meta,
                             text_size)
    return BpPatricia(tree, depths, bytes(chars), sa_block, block_meta, text_size)


def dfuds_edge_nodes(degrees) -> np.ndarray:
    """Preorder ids of edge targets listed in DFUDS edge order."""
    tree = PointerTree.from_preorder_degrees(list(degrees))
    out = [v for ch in tree.children for v in reversed(ch)]
    return np.asarray(out, dtype=np.int64)


def build_patricia(sa_block, lcp_block, char_provider, backing: str = "pointer",
                   block_meta=(0, 1, None)) -> PatriciaTrie:
    """Two-phase construction: topology scan, then one label lookup per edge."""
    shape = build_shape(sa_block, lcp_block, char_provider.size)
    chars = char_provider.fetch(shape.label_pos[1:]) if shape.node_count > 1 else b""
    meta = _meta(block_meta, len(shape.leaf_rank[shape.leaf_rank >= 0]))
    return from_shape(shape, chars, backing, sa_block, meta, char_provider.size)


def build_patricia_dfuds_streaming(sa_block, lcp_block, char_provider,
                                   block_meta=(0, 1, None)) -> DfudsPatricia:
    bits, depths, label_pos = stream_dfuds(sa_block, lcp_block, char_provider.size)
    chars = char_provider.fetch(label_pos) if len(label_pos) else b""
    return dfuds_from_stream(bits, depths, chars, sa_block, block_meta, char_provider.size)


def dfuds_from_stream(bits, depths, chars, sa_block, block_meta, text_size) -> DfudsPatricia:
    tree = SuccinctTree("dfuds", BitVector(bits), len(depths))
    return DfudsPatricia(tree, depths, chars, sa_block, _meta(block_meta, len(sa_block)),
                         text_size)


def _meta(block_meta, m):
    pe, start, length = block_meta
    return (pe, start, m if length is None else length)


def blind_search(trie: PatriciaTrie, p: bytes) -> BlindSearchResult:
    return trie.blind_search(p)


def verify_occurrence(p: bytes, fetched: bytes) -> bool:
    return len(fetched) == len(p) and fetched == p


def leaf_range_count(res: BlindSearchResult) -> int:
    if not res.matched:
        raise ValueError("leaf range is only defined for matched searches")
    lo, hi = res.leaf_range
    return hi - lo + 1


def trie_from_bytes(buf: bytes, offset: int, sa_block) -> tuple[PatriciaTrie, int]:
    tag, pe, start, length, text_size = struct.unpack_from("<BIQQQ", buf, offset)
    offset += struct.calcsize("<BIQQQ")
    backing = BACKINGS[tag]
    tree, offset = SuccinctTree.from_bytes(buf, offset)
    (nd,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    depths = np.frombuffer(buf, dtype="<i8", count=nd, offset=offset).astype(np.int64)
    offset += 8 * nd
    (nc,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    chars = bytes(buf[offset:offset + nc])
    offset += nc
    meta = (pe, start, length)
    if backing == "pointer":
        degrees = np.asarray([tree.outdegree(tree.position(k)) for k in range(tree.node_count)],
                             dtype=np.int64)
        ptr = PointerPatricia.__new__(PointerPatricia)
        PatriciaTrie.__init__(ptr, depths, chars, sa_block, meta, text_size)
        ptr.start = _iarray(np.concatenate(([0], np.cumsum(degrees))))
        kids = [v for ch in PointerTree.from_preorder_degrees(degrees.tolist()).children
                for v in ch]
        ptr.kids = _iarray(np.asarray(kids, dtype=np.int64))
        ranks = np.full(len(degrees), -1, dtype=np.int64)
        leaves = np.flatnonzero(degrees == 0)
        ranks[leaves] = np.arange(len(leaves))
        ptr.leaf_rank = _iarray(ranks)
        return ptr, offset
    if backing == "louds":
        (nl,) = struct.unpack_from("<Q", buf, offset)
        offset += 8
        ranks = np.frombuffer(buf, dtype="<i8", count=nl, offset=offset).astype(np.int64)
        offset += 8 * nl
        return LoudsPatricia(tree, depths, chars, ranks, sa_block, meta, text_size), offset
    cls = DfudsPatricia if backing == "dfuds" else BpPatricia
    return cls(tree, depths, chars, sa_block, meta, text_size), offset

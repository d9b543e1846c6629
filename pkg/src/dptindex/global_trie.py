"""The replicated top-level trie over the 2c block-boundary suffixes.

Leaf rank ``2p`` is the smallest suffix held by PE ``p`` and ``2p + 1`` its
largest (both 0-based).  Boundary suffixes are truncated to ``pmax``; equal
truncations collapse into one group leaf covering a range of ranks.
"""

from __future__ import annotations

import struct
from bisect import bisect_left
from dataclasses import dataclass

from .exceptions import EmptyPattern, PatternTooLong

INTERVAL = "Interval"
CANDIDATE = "Candidate"
ABSENT = "Absent"


@dataclass(frozen=True)
class RoutingResult:
    kind: str
    lo: int = -1
    hi: int = -1

    @property
    def interval(self):
        return (self.lo, self.hi) if self.kind == INTERVAL else None

    @property
    def candidate(self):
        return self.lo if self.kind == CANDIDATE else None

    def pes(self) -> range:
        """PEs that may hold occurrences."""
        if self.kind == ABSENT:
            return range(0)
        return range(self.lo, self.hi + 1)


def gather_boundaries(states) -> tuple[list[int], list[int]]:
    """Boundary positions and adjacent LCPs from PE states (sa_block, lcp_block, trie).

    ``lcps[k]`` is the LCP of boundary suffixes ``k-1`` and ``k``; ``lcps[0] = 0``.
    """
    positions: list[int] = []
    lcps: list[int] = []
    for st in states:
        sa = st.sa_block
        first, last = int(sa[0]), int(sa[-1])
        lcps.append(int(st.lcp_block[0]) if positions else 0)
        positions.append(first)
        lcps.append(boundary_self_lcp(st.trie.root_depth, len(sa), st.n, first))
        positions.append(last)
    return positions, lcps


def boundary_self_lcp(root_depth: int, block_len: int, n: int, first: int) -> int:
    """LCP of a block's first and last suffix; the whole suffix for one-suffix blocks."""
    return root_depth if block_len > 1 else n + 2 - first


@dataclass
class GlobalPlan:
    """Topology of the global trie with label requests still unresolved.

    ``label_req[u] = (text_pos, length)`` for every non-root node ``u``.
    Nodes are numbered in preorder.
    """

    pmax: int
    c: int
    depth: list
    children: list
    leaf_range: list  # (lo, hi) leaf ranks per node
    is_leaf: list
    label_req: list


def plan_global_trie(positions, lcps, pmax: int, text_size: int) -> GlobalPlan:
    if pmax < 1:
        raise ValueError(f"pmax must be >= 1, got {pmax}")
    k_total = len(positions)
    lens = [min(text_size + 1 - p, pmax) for p in positions]
    # groups of identical truncated strings
    groups = []  # (lo, hi, pos, len)
    seams = []  # lcp between group g-1 and g
    for k in range(k_total):
        lk = min(lcps[k], lens[k], lens[k - 1]) if k else 0
        if k and lk == lens[k] == lens[k - 1]:
            lo, _, pos, ln = groups[-1]
            groups[-1] = (lo, k, pos, ln)
            continue
        groups.append((k, k, positions[k], lens[k]))
        seams.append(lk)

    depth = [0]
    kids: list = [[]]
    leaf = [None]
    lpos = [0]  # a text position whose suffix passes through the node
    stack = [0]
    for g, (lo, hi, pos, ln) in enumerate(groups):
        if g:
            L = seams[g]
            top = stack[-1]
            while depth[top] > L:
                stack.pop()
                top = stack[-1]
            if depth[top] < L:
                c = kids[top][-1]
                w = len(depth)
                depth.append(L)
                kids.append([c])
                leaf.append(None)
                lpos.append(lpos[c])
                kids[top][-1] = w
                stack.append(w)
        top = stack[-1]
        u = len(depth)
        depth.append(ln)
        kids.append(None)
        leaf.append((lo, hi))
        lpos.append(pos)
        kids[top].append(u)
    root = 0
    order = []
    parent_depth = {root: 0}
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        if kids[u]:
            for v in kids[u]:
                parent_depth[v] = depth[u]
            stack.extend(reversed(kids[u]))
    new_id = {u: i for i, u in enumerate(order)}
    children = [[new_id[v] for v in kids[u]] if kids[u] else [] for u in order]
    is_leaf = [leaf[u] is not None for u in order]
    label_req = []
    for i, u in enumerate(order):
        if i == 0:
            label_req.append((0, 0))
            continue
        a = parent_depth[u]
        label_req.append((lpos[u] + a, depth[u] - a))
    ranges = [None] * len(order)
    for i in reversed(range(len(order))):
        if is_leaf[i]:
            ranges[i] = leaf[order[i]]
        else:
            ranges[i] = (ranges[children[i][0]][0], ranges[children[i][-1]][1])
    return GlobalPlan(pmax, k_total // 2, [depth[u] for u in order], children, ranges,
                      is_leaf, label_req)


class GlobalTrie:
    def __init__(self, plan: GlobalPlan, labels: list[bytes]):
        self.pmax = plan.pmax
        self.c = plan.c
        self.depth = list(plan.depth)
        self.children = [list(ch) for ch in plan.children]
        self.leaf_range = list(plan.leaf_range)
        self.is_leaf = list(plan.is_leaf)
        self.labels = [bytes(b) for b in labels]
        self.first = [bytes(self.labels[v][0] for v in ch) for ch in self.children]

    @property
    def leaf_count(self) -> int:
        return 2 * self.c

    @property
    def node_count(self) -> int:
        return len(self.depth)

    def _at(self, v: int) -> RoutingResult:
        lo, hi = self.leaf_range[v]
        if self.is_leaf[v] and lo == hi:
            return RoutingResult(CANDIDATE, lo // 2, lo // 2)
        return RoutingResult(INTERVAL, lo // 2, hi // 2)

    def _left_of(self, k: int) -> RoutingResult:
        # pattern sorts just before leaf k
        return RoutingResult(ABSENT) if k % 2 == 0 else RoutingResult(CANDIDATE, k // 2, k // 2)

    def _right_of(self, k: int) -> RoutingResult:
        # pattern sorts just after leaf k
        return RoutingResult(CANDIDATE, k // 2, k // 2) if k % 2 == 0 else RoutingResult(ABSENT)

    def route(self, p: bytes) -> RoutingResult:
        if len(p) == 0:
            raise EmptyPattern("pattern must not be empty")
        if len(p) > self.pmax:
            raise PatternTooLong(f"pattern length {len(p)} exceeds pmax={self.pmax}")
        u = 0
        i = 0
        m = len(p)
        while True:
            if i >= m:
                return self._at(u)
            kids = self.children[u]
            if not kids:
                return self._right_of(self.leaf_range[u][1])
            first = self.first[u]
            j = bisect_left(first, p[i])
            if j == len(first) or first[j] != p[i]:
                if j < len(first):
                    return self._left_of(self.leaf_range[kids[j]][0])
                return self._right_of(self.leaf_range[kids[-1]][1])
            v = kids[j]
            lab = self.labels[v]
            k = 1
            while k < len(lab) and i + k < m and lab[k] == p[i + k]:
                k += 1
            if i + k >= m:
                return self._at(v)
            if k == len(lab):
                u = v
                i += k
                continue
            if lab[k] > p[i + k]:
                return self._left_of(self.leaf_range[v][0])
            return self._right_of(self.leaf_range[v][1])

    def to_bytes(self) -> bytes:
        out = [struct.pack("<QQQ", self.pmax, self.c, self.node_count)]
        for u in range(self.node_count):
            lo, hi = self.leaf_range[u]
            out.append(struct.pack("<QQBqqQ", self.depth[u], len(self.children[u]),
                                   self.is_leaf[u], lo, hi, len(self.labels[u])))
            out.append(self.labels[u])
        return b"".join(out)

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int = 0):
        pmax, c, count = struct.unpack_from("<QQQ", buf, offset)
        offset += 24
        rec = struct.Struct("<QQBqqQ")
        depth, degree, leaf, ranges, labels = [], [], [], [], []
        for _ in range(count):
            d, deg, lf, lo, hi, ln = rec.unpack_from(buf, offset)
            offset += rec.size
            depth.append(d)
            degree.append(deg)
            leaf.append(bool(lf))
            ranges.append((lo, hi))
            labels.append(bytes(buf[offset:offset + ln]))
            offset += ln
        children = [[] for _ in range(count)]
        stack = []
        for u in range(count):
            if stack:
                children[stack[-1]].append(u)
                if len(children[stack[-1]]) == degree[stack[-1]]:
                    stack.pop()
            if degree[u]:
                stack.append(u)
        plan = GlobalPlan(pmax, c, depth, children, ranges, leaf, [None] * count)
        return cls(plan, labels), offset


def build_global_trie(boundaries, pmax: int, text_access) -> GlobalTrie:
    """Sequential construction; ``text_access(pos, length)`` returns label bytes."""
    positions, lcps = boundaries
    plan = plan_global_trie(positions, lcps, pmax, text_access.size)
    labels = [text_access(pos, ln) if ln else b"" for pos, ln in plan.label_req]
    return GlobalTrie(plan, labels)


class TextAccess:
    """``text_access`` over an in-memory text, sentinel-padded."""

    def __init__(self, text):
        self.text = text
        self.size = text.size

    def __call__(self, pos: int, length: int) -> bytes:
        return self.text.substring(pos, length)

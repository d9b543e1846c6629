"""Distributed Patricia trie: construction and query protocols on the BSP machine.

Every PE holds one SA/LCP block, a text slice padded by ``pmax`` characters,
a local Patricia trie over its block, and a replica of the global trie over
all block boundaries.  Queries are routed by the global trie at their arrival
PE and answered by at most two local tries.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bsp import CostLedger, Machine, distribute, owner_of
from .exceptions import EmptyPattern, PatternTooLong, SentinelInInput
from .global_trie import (ABSENT, CANDIDATE, INTERVAL, GlobalTrie, boundary_self_lcp,
                          plan_global_trie)
from .patricia import (BACKINGS, build_shape, dfuds_from_stream, from_shape, stream_dfuds,
                       verify_occurrence)
from .text import SENTINEL, Text, append_sentinel, build_lcp_array, build_suffix_array

QUERY_KINDS = ("exists", "count", "enumerate")
HEADER_BYTES = 16  # query id plus kind/arrival word


@dataclass(frozen=True)
class Query:
    kind: str
    pattern: bytes
    arrival_pe: int = 0


@dataclass
class QueryResult:
    kind: str
    pattern: bytes
    value: Any = None
    error: str | None = None
    supersteps: int = 0
    words: int = 0
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None


def _local_chars(st, positions: np.ndarray) -> bytes:
    buf = np.frombuffer(st.text_slice, dtype=np.uint8)
    return buf[positions - st.text_lo].tobytes()


def _in_slice(st, positions: np.ndarray) -> np.ndarray:
    return (positions >= st.text_lo) & (positions < st.text_lo + len(st.text_slice))


class DptIndex:
    """A built distributed Patricia trie and the machine that hosts it."""

    def __init__(self, machine: Machine, backing: str, pmax: int, label_batch):
        self.machine = machine
        self.backing = backing
        self.pmax = pmax
        self.label_batch = label_batch
        self.build_ledger = machine.ledger.since(0)
        self.last_ledger = CostLedger(machine.ledger.word_cost, machine.ledger.barrier_cost)
        self.last_histogram = [0] * machine.c
        self._next_qid = 0

    @property
    def c(self) -> int:
        return self.machine.c

    @property
    def n(self) -> int:
        return self.machine.states[0].n

    @property
    def blocks(self):
        return self.machine.states[0].blocks

    def global_trie(self, pe: int = 0) -> GlobalTrie:
        return self.machine.states[pe].gt

    def trie(self, pe: int):
        return self.machine.states[pe].trie

    def size_report(self, pos_width: int = 40) -> dict:
        total: dict = defaultdict(int)
        for st in self.machine.states:
            for k, v in st.trie.size_report(pos_width).items():
                total[k] += v
        out = dict(total)
        n = max(1, self.n)
        out["bits_per_char"] = out["trie_bits"] / n
        out["sa_bits_per_char"] = out["sa_bits"] / n
        return out

    # queries --------------------------------------------------------------
    def query_exists(self, p: bytes, arrival_pe: int = 0) -> QueryResult:
        return self.query_batch([Query("exists", p, arrival_pe)])[0]

    def query_count(self, p: bytes, arrival_pe: int = 0) -> QueryResult:
        return self.query_batch([Query("count", p, arrival_pe)])[0]

    def query_enumerate(self, p: bytes, arrival_pe: int = 0) -> QueryResult:
        return self.query_batch([Query("enumerate", p, arrival_pe)])[0]

    def query_batch(self, queries) -> list[QueryResult]:
        """Answer all queries in lockstep; returns results in input order."""
        machine = self.machine
        c = machine.c
        qids = []
        for st in machine.states:
            st.incoming = []
            st.pending = {}
            st.results = {}
            st.received_queries = 0
        for q in queries:
            if q.kind not in QUERY_KINDS:
                raise ValueError(f"unknown query kind {q.kind!r}")
            if not 0 <= q.arrival_pe < c:
                raise ValueError(f"arrival PE {q.arrival_pe} outside [0, {c})")
            qid = self._next_qid
            self._next_qid += 1
            qids.append(qid)
            machine.states[q.arrival_pe].incoming.append((qid, q.kind, bytes(q.pattern)))
        start = len(machine.ledger)
        step = 0
        while True:
            busy = any(machine.inboxes[pe] for pe in range(c)) or \
                any(st.incoming for st in machine.states)
            if not busy:
                break
            step += 1
            machine.run_superstep(lambda ctx, s=step: _query_step(ctx, s), label=f"query-{step}")
        self.last_ledger = machine.ledger.since(start)
        self.last_histogram = [st.received_queries for st in machine.states]

        found = {}
        for st in machine.states:
            found.update(st.results)
        out = []
        for q, qid in zip(queries, qids):
            value, error, steps, detail = found[qid]
            out.append(QueryResult(q.kind, bytes(q.pattern), value, error, steps,
                                   machine.qid_words.pop(qid, 0), detail))
        return out

    def to_bytes(self) -> bytes:
        from .index_io import dump_index
        return dump_index(self)


# -- query protocol ---------------------------------------------------------

def _finish(st, qid, value, step, detail, error=None):
    st.results[qid] = (value, error, step, detail)


def _interior(st, lo, hi):
    return [(st.blocks[q][0], st.blocks[q][1]) for q in range(lo + 1, hi)]


def _query_step(ctx, step):
    st = ctx.state
    if step == 1:
        for qid, kind, p in st.incoming:
            _arrive(ctx, qid, kind, p)
        st.incoming = []
    for msg in ctx.inbox:
        if msg.kind == "QueryForward":
            _search(ctx, msg.payload, step)
        elif msg.kind == "DrmaReply":
            tag, data = msg.payload
            if tag[0] == "verify":
                _verify(ctx, tag[1], data, step)
            else:
                _arrival_update(ctx, tag[1], step, interior=data)
        elif msg.kind == "PartialResult":
            qid, role, value = msg.payload
            _arrival_update(ctx, qid, step, role=role, value=value)


def _arrive(ctx, qid, kind, p):
    st = ctx.state
    try:
        if SENTINEL in p:
            raise SentinelInInput("pattern contains the sentinel byte")
        res = st.gt.route(p)
    except (EmptyPattern, PatternTooLong, SentinelInInput) as exc:
        _finish(st, qid, None, 1, {}, error=f"{type(exc).__name__}: {exc}")
        return
    ctx.work(len(p))
    detail = {"route": res.kind, "l": res.lo, "r": res.hi}
    if res.kind == ABSENT:
        _finish(st, qid, {"exists": False, "count": 0, "enumerate": []}[kind], 1, detail)
        return
    if kind == "exists" and res.kind == INTERVAL:
        _finish(st, qid, True, 1, detail)
        return
    nbytes = len(p) + HEADER_BYTES
    verify = res.kind == CANDIDATE
    # detail rides along for result reporting only and is not charged
    if res.kind == CANDIDATE or res.lo == res.hi:
        ctx.send(res.lo, "QueryForward", (qid, kind, p, ctx.pe, "both", verify, detail),
                 nbytes, qid)
        return
    ctx.send(res.lo, "QueryForward", (qid, kind, p, ctx.pe, "left", False, detail), nbytes, qid)
    ctx.send(res.hi, "QueryForward", (qid, kind, p, ctx.pe, "right", False, detail), nbytes,
             qid)
    interior = _interior(st, res.lo, res.hi)
    need_interior = 0
    if kind == "enumerate":
        for q, (start, length) in enumerate(interior, res.lo + 1):
            ctx.get(q, "sa", start, length, tag=("interior", qid), qid=qid)
            need_interior += 1
    st.pending[qid] = {"kind": kind, "detail": detail, "parts": {}, "interior": [],
                       "need_interior": need_interior,
                       "interior_count": sum(length for _, length in interior)}


def _search(ctx, payload, step):
    st = ctx.state
    qid, kind, p, arrival, role, verify, detail = payload
    st.received_queries += 1
    res = st.trie.blind_search(p)
    ctx.work(res.steps)
    job = {"kind": kind, "p": p, "arrival": arrival, "role": role, "res": res,
           "detail": detail}
    if not res.matched:
        _local_done(ctx, qid, job, False, step)
        return
    if not verify:
        _local_done(ctx, qid, job, True, step)
        return
    st.pending[("v", qid)] = job
    w = res.witness
    owner = owner_of(st.blocks, w)
    ctx.get(owner, "text", w, len(p), tag=("verify", qid), qid=qid)


def _verify(ctx, qid, data, step):
    st = ctx.state
    job = st.pending.pop(("v", qid))
    ctx.work(len(job["p"]))
    _local_done(ctx, qid, job, verify_occurrence(job["p"], bytes(data)), step)


def _local_done(ctx, qid, job, hit, step):
    """A local trie has resolved its share; finish or report to the arrival PE."""
    st = ctx.state
    kind = job["kind"]
    res = job["res"]
    if hit:
        lo, hi = res.leaf_range
        occ = hi - lo + 1
        positions = st.sa_block[lo:hi + 1].tolist() if kind == "enumerate" else []
    else:
        occ = 0
        positions = []
    if job["role"] == "both":
        detail = dict(job["detail"], occ_l=occ, occ_r=0, interior=0)
        value = {"exists": hit, "count": occ, "enumerate": sorted(positions)}[kind]
        _finish(st, qid, value, step, detail)
        return
    if kind == "count":
        ctx.send(job["arrival"], "PartialResult", (qid, job["role"], occ), HEADER_BYTES + 8, qid)
    else:
        ctx.send(job["arrival"], "PartialResult", (qid, job["role"], positions),
                 HEADER_BYTES + 8 * len(positions), qid)


def _arrival_update(ctx, qid, step, role=None, value=None, interior=None):
    st = ctx.state
    pend = st.pending[qid]
    if role is not None:
        pend["parts"][role] = value
    if interior is not None:
        pend["interior"].append(np.asarray(interior))
    if len(pend["parts"]) < 2 or len(pend["interior"]) < pend["need_interior"]:
        return
    del st.pending[qid]
    left, right = pend["parts"]["left"], pend["parts"]["right"]
    detail = dict(pend["detail"])
    if pend["kind"] == "count":
        detail.update(occ_l=left, occ_r=right, interior=pend["interior_count"])
        _finish(st, qid, left + right + pend["interior_count"], step, detail)
        return
    merged = list(left) + list(right)
    for block in pend["interior"]:
        merged.extend(block.tolist())
    ctx.work(len(merged))
    detail.update(occ_l=len(left), occ_r=len(right), interior=pend["interior_count"])
    _finish(st, qid, sorted(merged), step, detail)


# -- construction -----------------------------------------------------------

def _gather_labels(ctx, positions, offset):
    """Resolve label characters locally where possible, remote reads grouped by owner."""
    st = ctx.state
    local = _in_slice(st, positions)
    out = np.zeros(len(positions), dtype=np.uint8)
    if local.any():
        out[local] = np.frombuffer(_local_chars(st, positions[local]), dtype=np.uint8)
    remote = np.flatnonzero(~local)
    if len(remote):
        starts = np.asarray([s for s, _ in st.blocks], dtype=np.int64)
        owners = np.searchsorted(starts, positions[remote], side="right") - 1
        for q in np.unique(owners).tolist():
            idx = remote[owners == q]
            ctx.gather(q, "text", positions[idx], tag=("label", idx + offset))
    return out


def _build_local(ctx, backing, batch):
    st = ctx.state
    size = st.n + 1
    if backing == "dfuds":
        bits, depths, label_pos = stream_dfuds(st.sa_block, st.lcp_block, size)
        st._draft = ("stream", bits, depths)
    else:
        shape = build_shape(st.sa_block, st.lcp_block, size)
        label_pos = shape.label_pos[1:]
        st._draft = ("shape", shape)
    ctx.work(len(st.sa_block))
    st._label_pos = np.asarray(label_pos, dtype=np.int64)
    st._labels = np.zeros(len(label_pos), dtype=np.uint8)
    st._batch = batch if batch else max(1, len(label_pos))
    st._next = 0


def _fetch_batch(ctx):
    st = ctx.state
    for msg in ctx.inbox:
        if msg.kind == "DrmaReply":
            (_, idx), data = msg.payload
            st._labels[idx] = np.frombuffer(data, dtype=np.uint8)
    lo = st._next
    hi = min(lo + st._batch, len(st._label_pos))
    if lo < hi:
        st._labels[lo:hi] = _gather_labels(ctx, st._label_pos[lo:hi], lo)
    st._next = hi


def _finalize_local(ctx, backing):
    st = ctx.state
    for msg in ctx.inbox:
        if msg.kind == "DrmaReply":
            (_, idx), data = msg.payload
            st._labels[idx] = np.frombuffer(data, dtype=np.uint8)
    chars = st._labels.tobytes()
    meta = (st.pe_id, st.block_start, len(st.sa_block))
    size = st.n + 1
    draft = st._draft
    if draft[0] == "stream":
        st.trie = dfuds_from_stream(draft[1], draft[2], chars, st.sa_block, meta, size)
    else:
        st.trie = from_shape(draft[1], chars, backing, st.sa_block, meta, size)
    for name in ("_draft", "_label_pos", "_labels", "_batch", "_next"):
        delattr(st, name)
    ctx.work(st.trie.node_count)
    first, last = int(st.sa_block[0]), int(st.sa_block[-1])
    seam = int(st.lcp_block[0])
    self_lcp = boundary_self_lcp(st.trie.root_depth, len(st.sa_block), st.n, first)
    for q in range(ctx.c):
        ctx.send(q, "BoundaryBroadcast", (st.pe_id, first, last, seam, self_lcp), 32,
                 mode="collective")


def _plan_and_scatter(ctx, pmax):
    st = ctx.state
    recs = sorted(m.payload for m in ctx.inbox if m.kind == "BoundaryBroadcast")
    positions, lcps = [], []
    for pe, first, last, seam, self_lcp in recs:
        lcps.append(seam if pe else 0)
        positions.append(first)
        lcps.append(self_lcp)
        positions.append(last)
    plan = plan_global_trie(positions, lcps, pmax, st.n + 1)
    ctx.work(len(plan.depth))
    st._gplan = plan
    for e, (pos, length) in enumerate(plan.label_req):
        if e == 0:
            continue
        if owner_of(st.blocks, pos) == st.pe_id:
            label = st.text_slice[pos - st.text_lo:pos - st.text_lo + length]
            ctx.send(e % ctx.c, "LabelExchange", (e, label), 8 + length, mode="collective")


def _forward_labels(ctx):
    for msg in ctx.inbox:
        if msg.kind == "LabelExchange":
            e, label = msg.payload
            for q in range(ctx.c):
                ctx.send(q, "LabelExchange", (e, label), 8 + len(label), mode="collective")


def _assemble_global(ctx):
    st = ctx.state
    plan = st._gplan
    labels = [b""] * len(plan.depth)
    for msg in ctx.inbox:
        if msg.kind == "LabelExchange":
            e, label = msg.payload
            labels[e] = label
    st.gt = GlobalTrie(plan, labels)
    ctx.work(sum(len(b) for b in labels))
    del st._gplan


def build(text, c: int, pmax: int = 30, backing: str = "pointer", label_batch=None,
          word_cost: float = 1, barrier_cost: float = 1, sa=None, lcp=None,
          audit: bool = False, parallel: bool = False) -> DptIndex:
    """Distribute ``text`` over ``c`` PEs and run the construction supersteps.

    ``label_batch`` bounds the label characters each PE requests per
    superstep; ``None`` fetches everything at once.
    """
    if not isinstance(text, Text):
        text = append_sentinel(text)
    if backing not in BACKINGS:
        raise ValueError(f"unknown backing {backing!r}; expected one of {BACKINGS}")
    if pmax < 1:
        raise ValueError(f"pmax must be >= 1, got {pmax}")
    if label_batch is not None and label_batch < 1:
        raise ValueError(f"label batch must be >= 1, got {label_batch}")
    if sa is None:
        sa = build_suffix_array(text)
    if lcp is None:
        lcp = build_lcp_array(text, sa)
    machine = distribute(text, c, pmax, sa, lcp, audit=audit, word_cost=word_cost,
                         barrier_cost=barrier_cost, parallel=parallel)
    machine.run_superstep(lambda ctx: (_build_local(ctx, backing, label_batch),
                                       _fetch_batch(ctx)), label="build-labels")
    while any(st._next < len(st._label_pos) for st in machine.states):
        machine.run_superstep(_fetch_batch, label="build-labels")
    machine.run_superstep(lambda ctx: _finalize_local(ctx, backing), label="build-boundaries")
    machine.run_superstep(lambda ctx: _plan_and_scatter(ctx, pmax), label="build-gt-scatter")
    machine.run_superstep(_forward_labels, label="build-gt-forward")
    machine.run_superstep(_assemble_global, label="build-gt-assemble")
    return DptIndex(machine, backing, pmax, label_batch)

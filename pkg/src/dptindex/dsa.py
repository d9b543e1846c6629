"""Distributed suffix array baseline with optional pruned suffixes.

The global SA is block-partitioned exactly like the trie index.  A count
query runs two binary searches (lower and upper bound).  The arrival PE first
picks the responsible blocks by comparing the pattern against replicated
block-first suffixes, then the owning PEs finish the search inside their
blocks.  Every suffix comparison uses the stored pruned prefix first and
reads the rest of the suffix only if still undecided.  A remote read costs
one superstep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bsp import distribute
from .exceptions import EmptyPattern, SentinelInInput
from .text import SENTINEL, Text, append_sentinel, build_lcp_array, build_suffix_array


@dataclass
class DsaResult:
    pattern: bytes
    count: int | None
    error: str | None
    supersteps: int
    words: int
    remote_chars: int
    remote_reads: int

    @property
    def fetch_stats(self) -> dict:
        return {"remote_chars": self.remote_chars, "remote_reads": self.remote_reads,
                "supersteps": self.supersteps, "words": self.words}


def _read(st, stats, lo: int, hi: int):
    """``T[lo..hi]`` clipped at the sentinel; remote pieces suspend the caller."""
    end = st.n + 1
    top = min(hi, end)
    pad = hi - top if hi > top else 0
    if lo > top:
        return bytes([SENTINEL]) * (hi - lo + 1)
    pieces = []
    requests = []
    pos = lo
    blocks = st.blocks
    while pos <= top:
        q = _owner(blocks, pos)
        b_start, b_len = blocks[q]
        stop = min(top, b_start + b_len - 1)
        if q == st.pe_id:
            pieces.append(st.text_slice[pos - st.text_lo:stop - st.text_lo + 1])
        else:
            pieces.append(len(requests))
            requests.append((q, pos, stop - pos + 1))
            stats["remote_chars"] += stop - pos + 1
            stats["remote_reads"] += 1
        pos = stop + 1
    if requests:
        replies = yield requests
        pieces = [replies[x] if isinstance(x, int) else x for x in pieces]
    return b"".join(pieces) + bytes([SENTINEL]) * pad


def _owner(blocks, pos):
    lo, hi = 0, len(blocks) - 1
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if blocks[mid][0] <= pos:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _compare(st, stats, q: int, pruned: bytes, p: bytes):
    """Sign of ``T[q..q+|p|-1]`` versus ``p``."""
    m = len(p)
    k = min(st.prune_len, m)
    head = pruned[:k]
    if head != p[:k]:
        return -1 if head < p[:k] else 1
    if k == m:
        return 0
    rest = yield from _read(st, stats, q + k, q + m - 1)
    s = head + rest
    return (s > p) - (s < p)


def _block_search(st, stats, p: bytes, strict: bool):
    """Largest block whose first suffix is below ``p`` (or not above, if not strict)."""
    lo, hi, ans = 1, len(st.blocks) - 1, 0
    while lo <= hi:
        mid = (lo + hi) >> 1
        r = yield from _compare(st, stats, st.first_sa[mid], st.first_pruned[mid], p)
        if r < 0 or (not strict and r == 0):
            ans = mid
            lo = mid + 1
        else:
            hi = mid - 1
    return ans


def _local_search(st, stats, p: bytes, strict: bool):
    """Global rank bound: suffixes below ``p`` (strict) or not above it."""
    lo, hi = 0, len(st.sa_block)
    while lo < hi:
        mid = (lo + hi) >> 1
        r = yield from _compare(st, stats, int(st.sa_block[mid]), st.pruned[mid], p)
        if r < 0 or (not strict and r == 0):
            lo = mid + 1
        else:
            hi = mid
    return st.block_start - 1 + lo


class _Task:
    __slots__ = ("gen", "done", "waiting", "replies", "qid", "stats", "tid")

    def __init__(self, gen, done, qid, stats):
        self.gen = gen
        self.done = done
        self.qid = qid
        self.stats = stats
        self.waiting = 0
        self.replies = None
        self.tid = None


def _advance(ctx, task, send_value):
    st = ctx.state
    try:
        req = task.gen.send(send_value)
    except StopIteration as stop:
        task.done(ctx, stop.value)
        return
    tid = st.task_seq
    st.task_seq += 1
    st.tasks[tid] = task
    task.tid = tid
    task.waiting = len(req)
    task.replies = [None] * len(req)
    for k, (q, pos, length) in enumerate(req):
        ctx.get(q, "text", pos, length, tag=(tid, k), qid=task.qid)
    ctx.work(len(req))


def _start(ctx, gen, done, qid, stats):
    _advance(ctx, _Task(gen, done, qid, stats), None)


def _dsa_step(ctx, step):
    st = ctx.state
    if step == 1:
        for qid, p in st.incoming:
            _arrive(ctx, qid, p, step)
        st.incoming = []
    ready = []
    for msg in ctx.inbox:
        if msg.kind == "DrmaReply":
            (tid, k), data = msg.payload
            task = st.tasks[tid]
            task.replies[k] = bytes(data)
            task.waiting -= 1
            if task.waiting == 0:
                ready.append(task)
        elif msg.kind == "QueryForward":
            _forwarded(ctx, msg.payload, step)
        elif msg.kind == "PartialResult":
            qid, role, value, stats = msg.payload
            pend = st.pending[qid]
            pend["bounds"][role] = value
            for key in pend["stats"]:
                pend["stats"][key] += stats[key]
            if len(pend["bounds"]) == 2:
                del st.pending[qid]
                b = pend["bounds"]
                st.results[qid] = (b["le"] - b["lt"], None, step, pend["stats"])
    for task in ready:
        del st.tasks[task.tid]
        _advance(ctx, task, task.replies)


def _arrive(ctx, qid, p, step):
    st = ctx.state
    if not p:
        st.results[qid] = (None, "EmptyPattern: pattern must not be empty", step,
                           _zero_stats())
        return
    if SENTINEL in p:
        st.results[qid] = (None, "SentinelInInput: pattern contains the sentinel byte",
                           step, _zero_stats())
        return
    stats = _zero_stats()
    pend = {"p": p, "blocks": {}, "bounds": {}, "stats": stats}
    st.pending[qid] = pend

    def block_found(role):
        def done(ctx2, b):
            pend["blocks"][role] = b
            if len(pend["blocks"]) == 2:
                _dispatch(ctx2, qid, pend)
        return done

    _start(ctx, _block_search(st, stats, p, True), block_found("lt"), qid, stats)
    _start(ctx, _block_search(st, stats, p, False), block_found("le"), qid, stats)


def _dispatch(ctx, qid, pend):
    p = pend["p"]
    b = pend["blocks"]
    nbytes = len(p) + 16
    if b["lt"] == b["le"]:
        ctx.send(b["lt"], "QueryForward", (qid, p, ctx.pe, ("lt", "le")), nbytes, qid)
    else:
        ctx.send(b["lt"], "QueryForward", (qid, p, ctx.pe, ("lt",)), nbytes, qid)
        ctx.send(b["le"], "QueryForward", (qid, p, ctx.pe, ("le",)), nbytes, qid)


def _forwarded(ctx, payload, step):
    st = ctx.state
    qid, p, arrival, roles = payload
    st.received_queries += 1
    for role in roles:
        stats = _zero_stats()

        def done(ctx2, bound, role=role, stats=stats):
            ctx2.send(arrival, "PartialResult", (qid, role, bound, stats), 24, qid)

        _start(ctx, _local_search(st, stats, p, role == "lt"), done, qid, stats)


def _zero_stats():
    return {"remote_chars": 0, "remote_reads": 0}


class DsaIndex:
    def __init__(self, machine, prune_len: int):
        self.machine = machine
        self.prune_len = prune_len
        self.build_ledger = machine.ledger.since(0)
        self.last_ledger = machine.ledger.since(len(machine.ledger))
        self.last_histogram = [0] * machine.c
        self._next_qid = 0

    @property
    def c(self) -> int:
        return self.machine.c

    @property
    def n(self) -> int:
        return self.machine.states[0].n

    def count(self, p: bytes, arrival_pe: int = 0) -> DsaResult:
        return self.count_batch([(p, arrival_pe)])[0]

    def count_batch(self, queries) -> list[DsaResult]:
        """``queries`` is a list of ``(pattern, arrival_pe)``."""
        machine = self.machine
        c = machine.c
        for st in machine.states:
            st.incoming = []
            st.pending = {}
            st.results = {}
            st.tasks = {}
            st.task_seq = 0
            st.received_queries = 0
        qids = []
        for p, arrival in queries:
            if not 0 <= arrival < c:
                raise ValueError(f"arrival PE {arrival} outside [0, {c})")
            qid = ("dsa", self._next_qid)
            self._next_qid += 1
            qids.append(qid)
            machine.states[arrival].incoming.append((qid, bytes(p)))
        start = len(machine.ledger)
        step = 0
        while any(machine.inboxes) or any(st.incoming for st in machine.states):
            step += 1
            machine.run_superstep(lambda ctx, s=step: _dsa_step(ctx, s), label=f"dsa-{step}")
        self.last_ledger = machine.ledger.since(start)
        self.last_histogram = [st.received_queries for st in machine.states]
        found = {}
        for st in machine.states:
            found.update(st.results)
        out = []
        for (p, _), qid in zip(queries, qids):
            value, error, steps, stats = found[qid]
            out.append(DsaResult(bytes(p), value, error, steps, machine.qid_words.pop(qid, 0),
                                 stats["remote_chars"], stats["remote_reads"]))
        return out


def _build_pruned(ctx, ell):
    st = ctx.state
    end = st.n + 1
    m = len(st.sa_block)
    st.pruned_buf = np.zeros((m, ell), dtype=np.uint8)
    if ell == 0:
        return
    pos = st.sa_block[:, None] + np.arange(ell)[None, :]
    valid = pos <= end
    local = valid & (pos >= st.text_lo) & (pos < st.text_lo + len(st.text_slice))
    buf = np.frombuffer(st.text_slice, dtype=np.uint8)
    st.pruned_buf[local] = buf[pos[local] - st.text_lo]
    remote = valid & ~local
    if remote.any():
        flat = np.flatnonzero(remote.ravel())
        starts = np.asarray([s for s, _ in st.blocks], dtype=np.int64)
        rpos = pos.ravel()[flat]
        owners = np.searchsorted(starts, rpos, side="right") - 1
        for q in np.unique(owners).tolist():
            sel = owners == q
            ctx.gather(q, "text", rpos[sel], tag=flat[sel])
    ctx.work(m * ell)


def _broadcast_first(ctx):
    st = ctx.state
    flat = st.pruned_buf.reshape(-1)
    for msg in ctx.inbox:
        if msg.kind == "DrmaReply":
            idx, data = msg.payload
            flat[idx] = np.frombuffer(data, dtype=np.uint8)
    st.pruned = [bytes(row) for row in st.pruned_buf]
    del st.pruned_buf
    first = (st.pe_id, int(st.sa_block[0]), st.pruned[0])
    for q in range(ctx.c):
        ctx.send(q, "BoundaryBroadcast", first, 8 + 8 + len(first[2]), mode="collective")


def _assemble_first(ctx):
    st = ctx.state
    recs = sorted(m.payload for m in ctx.inbox if m.kind == "BoundaryBroadcast")
    st.first_sa = [r[1] for r in recs]
    st.first_pruned = [r[2] for r in recs]


def build_dsa(text, c: int, prune_len: int = 5, word_cost: float = 1,
              barrier_cost: float = 1, sa=None, lcp=None, audit: bool = False) -> DsaIndex:
    if not isinstance(text, Text):
        text = append_sentinel(text)
    if prune_len < 0:
        raise ValueError(f"prune length must be >= 0, got {prune_len}")
    if sa is None:
        sa = build_suffix_array(text)
    if lcp is None:
        lcp = build_lcp_array(text, sa)
    machine = distribute(text, c, 0, sa, lcp, audit=audit, word_cost=word_cost,
                         barrier_cost=barrier_cost)
    for st in machine.states:
        st.prune_len = prune_len
    machine.run_superstep(lambda ctx: _build_pruned(ctx, prune_len), label="dsa-pruned")
    machine.run_superstep(_broadcast_first, label="dsa-boundaries")
    machine.run_superstep(_assemble_first, label="dsa-assemble")
    return DsaIndex(machine, prune_len)


def dsa_count(idx: DsaIndex, p: bytes, arrival_pe: int = 0):
    res = idx.count(p, arrival_pe)
    if res.error is not None:
        raise (EmptyPattern if res.error.startswith("Empty") else SentinelInInput)(res.error)
    return res.count, res.fetch_stats

"""A deterministic bulk-synchronous parallel machine.

Each superstep runs one compute function per PE against that PE's own
state, then delivers every message at the barrier ordered by
``(src, sequence)``.  DRMA reads are requests serviced at the barrier; the
reply shows up in the requester's inbox in the next superstep, like any other
message.  Costs follow ``w + h*G + L`` per superstep.
"""

from __future__ import annotations

import contextvars
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .exceptions import DeliveryToInvalidPe, FetchOutOfSlice, LocalityViolation
from .text import SENTINEL, Text

WORD_BYTES = 8
MODES = ("one-sided", "collective", "p2p")
KINDS = ("QueryForward", "DrmaRequest", "DrmaReply", "PartialResult", "LabelExchange",
         "BoundaryBroadcast")

_ACTIVE_PE = contextvars.ContextVar("active_pe", default=None)


def words_for(nbytes: int) -> int:
    return -(-int(nbytes) // WORD_BYTES)


@dataclass(frozen=True)
class Message:
    """``payload`` is a Python object; ``payload_words`` is its declared wire size."""

    src: int
    dst: int
    kind: str
    payload: Any
    payload_words: int
    seq: int
    qid: Any = None
    mode: str = "p2p"


@dataclass(frozen=True)
class SuperstepCost:
    index: int
    label: str
    w: int
    h: int
    modes: tuple  # words per mode, in MODES order
    per_pe: tuple  # max(sent, received) words per PE

    @property
    def words(self) -> int:
        return sum(self.modes)

    def mode_breakdown(self) -> str:
        return ";".join(f"{m}={v}" for m, v in zip(MODES, self.modes))


class CostLedger:
    """Append-only record of superstep costs."""

    def __init__(self, word_cost: float = 1, barrier_cost: float = 1):
        self.word_cost = word_cost
        self.barrier_cost = barrier_cost
        self.entries: list[SuperstepCost] = []

    def append(self, entry: SuperstepCost) -> None:
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def supersteps(self) -> int:
        return len(self.entries)

    def since(self, start: int) -> "CostLedger":
        out = CostLedger(self.word_cost, self.barrier_cost)
        out.entries = self.entries[start:]
        return out

    def total_cost(self) -> float:
        return sum(e.w + e.h * self.word_cost + self.barrier_cost for e in self.entries)

    def total_words(self) -> int:
        return sum(e.words for e in self.entries)

    def max_pe_words(self) -> int:
        if not self.entries:
            return 0
        totals = np.sum([e.per_pe for e in self.entries], axis=0)
        return int(totals.max())

    def mode_words(self) -> dict:
        return {m: sum(e.modes[k] for e in self.entries) for k, m in enumerate(MODES)}

    def to_tsv(self) -> str:
        lines = ["superstep\tw\th\tmode_breakdown"]
        for e in self.entries:
            lines.append(f"{e.index}\t{e.w}\t{e.h}\t{e.mode_breakdown()}")
        return "\n".join(lines) + "\n"


class PeState:
    """Everything one PE owns.  Attributes are free-form."""

    def __init__(self, pe_id: int, **fields):
        object.__setattr__(self, "pe_id", pe_id)
        for k, v in fields.items():
            object.__setattr__(self, k, v)

    def __repr__(self):
        return f"PeState(pe_id={self.pe_id})"


class AuditedPeState(PeState):
    """Raises LocalityViolation when another PE's compute phase touches this state."""

    def _guard(self, name):
        active = _ACTIVE_PE.get()
        if active is not None and name != "pe_id":
            own = object.__getattribute__(self, "pe_id")
            if active != own:
                raise LocalityViolation(
                    f"PE {active} accessed attribute {name!r} of PE {own}")

    def __getattribute__(self, name):
        if not name.startswith("__") and name != "_guard":
            object.__getattribute__(self, "_guard")(name)
        return object.__getattribute__(self, name)

    def __setattr__(self, name, value):
        self._guard(name)
        object.__setattr__(self, name, value)


@dataclass
class _Drma:
    requester: int
    target: int
    region: str
    positions: Any  # (start, length) range or an array of single positions
    ranged: bool
    tag: Any
    qid: Any
    mode: str


@dataclass
class Context:
    """Handle passed to a compute phase; all effects go through it."""

    machine: "Machine"
    pe: int
    state: PeState
    inbox: list
    _out: list = field(default_factory=list)
    _drma: list = field(default_factory=list)
    _work: int = 0

    @property
    def c(self) -> int:
        return self.machine.c

    def _check_dst(self, dst):
        if not 0 <= dst < self.machine.c:
            raise DeliveryToInvalidPe(f"PE {self.pe} addressed PE {dst} on a "
                                      f"{self.machine.c}-PE machine")

    def send(self, dst: int, kind: str, payload, nbytes: int, qid=None, mode: str = "p2p"):
        self._check_dst(dst)
        if kind not in KINDS or mode not in MODES:
            raise ValueError(f"unknown message kind/mode {kind!r}/{mode!r}")
        self._out.append((dst, kind, payload, words_for(nbytes), qid, mode))

    def get(self, dst: int, region: str, start: int, length: int, tag=None, qid=None,
            mode: str = "one-sided"):
        """Read ``length`` consecutive entries from ``dst``; charged 2 request words."""
        self._check_dst(dst)
        self._drma.append(_Drma(self.pe, dst, region, (int(start), int(length)), True,
                                tag, qid, mode))

    def gather(self, dst: int, region: str, positions, tag=None, qid=None,
               mode: str = "one-sided"):
        """Read scattered single entries; charged one request word per position."""
        self._check_dst(dst)
        pos = np.asarray(positions, dtype=np.int64)
        self._drma.append(_Drma(self.pe, dst, region, pos, False, tag, qid, mode))

    def work(self, units: int) -> None:
        self._work += int(units)


class Machine:
    def __init__(self, states: list[PeState], word_cost: float = 1, barrier_cost: float = 1,
                 parallel: bool = False):
        self.states = states
        self.c = len(states)
        self.parallel = parallel
        self.ledger = CostLedger(word_cost, barrier_cost)
        self.inboxes: list[list[Message]] = [[] for _ in states]
        self.qid_words: dict = {}
        self.trace: list[tuple] = []

    def state(self, pe: int) -> PeState:
        return self.states[pe]

    # region reads happen at the barrier, outside any compute phase
    def _read(self, req: _Drma):
        st = self.states[req.target]
        if req.region == "text":
            lo = st.text_lo
            data = st.text_slice
            hi = lo + len(data) - 1
            if req.ranged:
                start, length = req.positions
                if length < 0 or start < lo or start + length - 1 > hi:
                    raise FetchOutOfSlice(
                        f"text [{start}, {start + length - 1}] outside PE {req.target} "
                        f"slice [{lo}, {hi}]")
                return data[start - lo:start - lo + length], length
            pos = req.positions
            if len(pos) and (pos.min() < lo or pos.max() > hi):
                raise FetchOutOfSlice(f"text position outside PE {req.target} slice [{lo}, {hi}]")
            buf = np.frombuffer(data, dtype=np.uint8)
            return buf[pos - lo].tobytes(), len(pos)
        if req.region == "sa":
            lo = st.block_start
            block = st.sa_block
            hi = lo + len(block) - 1
            if req.ranged:
                start, length = req.positions
                if length < 0 or start < lo or start + length - 1 > hi:
                    raise FetchOutOfSlice(f"SA range outside PE {req.target} block")
                return block[start - lo:start - lo + length].copy(), 8 * length
            pos = req.positions
            if len(pos) and (pos.min() < lo or pos.max() > hi):
                raise FetchOutOfSlice(f"SA index outside PE {req.target} block")
            return block[pos - lo].copy(), 8 * len(pos)
        raise ValueError(f"unknown DRMA region {req.region!r}")

    def run_superstep(self, compute: Callable[[Context], None], label: str = "") -> SuperstepCost:
        ctxs = [Context(self, pe, self.states[pe], self.inboxes[pe]) for pe in range(self.c)]

        def run(ctx):
            token = _ACTIVE_PE.set(ctx.pe)
            try:
                compute(ctx)
            finally:
                _ACTIVE_PE.reset(token)

        if self.parallel and self.c > 1:
            with ThreadPoolExecutor(max_workers=self.c) as pool:
                list(pool.map(run, ctxs))
        else:
            for ctx in ctxs:
                run(ctx)
        return self._barrier(ctxs, label)

    def _barrier(self, ctxs, label) -> SuperstepCost:
        c = self.c
        sent = [0] * c
        recv = [0] * c
        modes = dict.fromkeys(MODES, 0)
        outgoing: list[list[tuple]] = [[] for _ in range(c)]

        def charge(src, dst, words, qid, mode):
            if src == dst:
                return
            sent[src] += words
            recv[dst] += words
            modes[mode] += words
            if qid is not None:
                self.qid_words[qid] = self.qid_words.get(qid, 0) + words

        for ctx in ctxs:
            for dst, kind, payload, words, qid, mode in ctx._out:
                outgoing[ctx.pe].append((dst, kind, payload, words, qid, mode))
                charge(ctx.pe, dst, words, qid, mode)
        for ctx in ctxs:
            for req in ctx._drma:
                req_words = 2 if req.ranged else len(req.positions)
                charge(req.requester, req.target, req_words, req.qid, req.mode)
                data, nbytes = self._read(req)
                words = words_for(nbytes)
                charge(req.target, req.requester, words, req.qid, req.mode)
                outgoing[req.target].append((req.requester, "DrmaReply", (req.tag, data), words,
                                             req.qid, req.mode))

        inboxes: list[list[Message]] = [[] for _ in range(c)]
        for src in range(c):
            for seq, (dst, kind, payload, words, qid, mode) in enumerate(outgoing[src]):
                msg = Message(src, dst, kind, payload, words, seq, qid, mode)
                inboxes[dst].append(msg)
                self.trace.append((len(self.ledger) + 1, src, dst, kind, words, qid, mode))
        self.inboxes = inboxes

        per_pe = tuple(max(s, r) for s, r in zip(sent, recv))
        entry = SuperstepCost(len(self.ledger) + 1, label, max(ctx._work for ctx in ctxs),
                              max(per_pe) if per_pe else 0,
                              tuple(modes[m] for m in MODES), per_pe)
        self.ledger.append(entry)
        return entry


def block_table(total: int, c: int) -> list[tuple[int, int]]:
    """Ceil split of ``total`` items into ``c`` blocks as 1-based ``(start, length)``."""
    if c < 1:
        raise ValueError(f"PE count must be >= 1, got {c}")
    if c > total:
        raise ValueError(f"cannot give each of {c} PEs at least one of {total} suffixes")
    base, extra = divmod(total, c)
    out = []
    start = 1
    for p in range(c):
        length = base + (1 if p < extra else 0)
        out.append((start, length))
        start += length
    return out


def owner_of(blocks: list[tuple[int, int]], index: int) -> int:
    """PE whose block contains the 1-based ``index``."""
    starts = [s for s, _ in blocks]
    return bisect_right(starts, index) - 1


def distribute(text: Text, c: int, pmax: int, sa: np.ndarray, lcp: np.ndarray,
               audit: bool = False, **machine_kw) -> Machine:
    """Give each PE its SA/LCP block and a text slice padded by ``pmax`` characters.

    Text positions are split with the same block table as the SA, so PE p
    owns positions ``start_p .. start_p + len_p - 1`` plus the padding.
    """
    size = text.size
    blocks = block_table(size, c)
    padded = text.data + bytes([SENTINEL]) * (pmax + 1)
    cls = AuditedPeState if audit else PeState
    states = []
    for p, (start, length) in enumerate(blocks):
        states.append(cls(
            p,
            n=text.n,
            c=c,
            pmax=pmax,
            blocks=tuple(blocks),
            block_start=start,
            sa_block=np.ascontiguousarray(sa[start - 1:start - 1 + length], dtype=np.int64),
            lcp_block=np.ascontiguousarray(lcp[start - 1:start - 1 + length], dtype=np.int64),
            text_lo=start,
            text_slice=padded[start - 1:start - 1 + length + pmax],
        ))
    return Machine(states, **machine_kw)

import numpy as np
import pytest

from dptindex.bsp import (MODES, CostLedger, Machine, PeState, block_table, distribute,
                          owner_of, words_for)
from dptindex.exceptions import DeliveryToInvalidPe, FetchOutOfSlice, LocalityViolation
from dptindex.text import append_sentinel, build_lcp_array, build_suffix_array


def machine_for(raw, c, pmax=3, **kw):
    t = append_sentinel(raw)
    sa = build_suffix_array(t)
    return t, sa, distribute(t, c, pmax, sa, build_lcp_array(t, sa), **kw)


def test_silent_superstep_costs_nothing():
    m = Machine([PeState(p) for p in range(3)])
    entry = m.run_superstep(lambda ctx: None)
    assert entry.h == 0 and entry.w == 0
    assert len(m.ledger) == 1


def test_h_is_max_words_at_one_pe():
    m = Machine([PeState(p) for p in range(4)])
    m.run_superstep(lambda ctx: ctx.send(0, "PartialResult", ctx.pe, 8))
    entry = m.ledger.entries[-1]
    assert entry.h == 3  # PE 0 receives three words; its own message is free
    assert [len(m.inboxes[p]) for p in range(4)] == [4, 0, 0, 0]


def test_delivery_order_and_next_superstep_visibility():
    m = Machine([PeState(p) for p in range(3)])
    m.run_superstep(lambda ctx: [ctx.send(1, "PartialResult", (ctx.pe, k), 8) for k in range(2)])
    seen = []
    m.run_superstep(lambda ctx: seen.extend(msg.payload for msg in ctx.inbox))
    assert seen == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
    assert all(not box for box in m.inboxes)


def test_invalid_destination():
    m = Machine([PeState(p) for p in range(2)])
    with pytest.raises(DeliveryToInvalidPe):
        m.run_superstep(lambda ctx: ctx.send(2, "PartialResult", None, 8))


def test_words_rounding():
    assert words_for(0) == 0 and words_for(1) == 1 and words_for(8) == 1 and words_for(9) == 2


def test_drma_fetch_within_and_into_padding():
    t, _, m = machine_for(b"abcdefg", 2, pmax=3)
    # PE 1 owns positions 5..8 and holds 3 padding characters
    assert m.states[1].text_lo == 5 and len(m.states[1].text_slice) == 4 + 3
    got = {}

    def ask(ctx):
        if ctx.pe == 0:
            ctx.get(1, "text", 5, 3, tag="a")
            ctx.get(0, "text", 3, 5, tag="b")  # straddles into PE 0's padding

    m.run_superstep(ask)
    m.run_superstep(lambda ctx: got.update({msg.payload[0]: msg.payload[1]
                                            for msg in ctx.inbox}))
    assert got == {"a": b"efg", "b": b"cdefg"}
    entry = m.ledger.entries[0]
    assert entry.modes[MODES.index("one-sided")] == 2 + 1  # request words + one reply word


def test_drma_past_padding():
    _, _, m = machine_for(b"abcdefg", 2, pmax=3)
    with pytest.raises(FetchOutOfSlice):
        m.run_superstep(lambda ctx: ctx.get(1, "text", 9, 4) if ctx.pe == 0 else None)
    _, _, m = machine_for(b"abcdefg", 2, pmax=3)
    with pytest.raises(FetchOutOfSlice):
        m.run_superstep(lambda ctx: ctx.get(1, "text", 4, 2) if ctx.pe == 0 else None)


def test_last_pe_is_sentinel_padded():
    _, _, m = machine_for(b"abcdefg", 2, pmax=3)
    assert m.states[1].text_slice == b"efg\x00\x00\x00\x00"


def test_sa_region_fetch():
    _, sa, m = machine_for(b"banana", 2)
    out = []
    m.run_superstep(lambda ctx: ctx.get(1, "sa", 5, 3, tag=0) if ctx.pe == 0 else None)
    m.run_superstep(lambda ctx: out.extend(msg.payload[1].tolist() for msg in ctx.inbox))
    assert out == [sa[4:7].tolist()]


def test_block_table_ceil_split():
    assert block_table(7, 2) == [(1, 4), (5, 3)]
    assert block_table(7, 1) == [(1, 7)]
    assert block_table(7, 7) == [(1, 1)] * 1 + [(k, 1) for k in range(2, 8)]
    assert block_table(10, 4) == [(1, 3), (4, 3), (7, 2), (9, 2)]
    with pytest.raises(ValueError):
        block_table(3, 4)
    assert owner_of(block_table(10, 4), 7) == 2


@pytest.mark.parametrize("c", [1, 2, 3, 7])
def test_reassembly(c):
    t, sa, m = machine_for(b"banana", c, pmax=2)
    assert np.concatenate([s.sa_block for s in m.states]).tolist() == sa.tolist()
    text = b"".join(s.text_slice[:len(s.sa_block)] for s in m.states)
    assert text == t.data


def test_audit_mode_catches_foreign_access():
    _, _, m = machine_for(b"banana", 2, audit=True)
    peer = m.states[1]

    def snoop(ctx):
        if ctx.pe == 0:
            peer.sa_block  # noqa: B018

    with pytest.raises(LocalityViolation):
        m.run_superstep(snoop)
    m.run_superstep(lambda ctx: ctx.state.sa_block)  # own state is fine


def _trace_run(parallel):
    _, _, m = machine_for(b"mississippi", 4, parallel=parallel)

    def chatter(ctx):
        for q in range(ctx.c):
            ctx.send(q, "PartialResult", (ctx.pe, q), 8 * (ctx.pe + 1))
        nxt = (ctx.pe + 1) % ctx.c
        ctx.get(nxt, "text", ctx.state.blocks[nxt][0], 1, tag=ctx.pe)
        ctx.work(ctx.pe)

    m.run_superstep(chatter)
    m.run_superstep(chatter)
    return m.trace, m.ledger.to_tsv(), [[(x.src, x.seq, x.payload) for x in box if
                                         x.kind != "DrmaReply"] for box in m.inboxes]


def test_determinism_and_parallel_equivalence():
    a = _trace_run(False)
    assert a == _trace_run(False)
    assert a == _trace_run(True)


def test_ledger_totals_and_tsv():
    led = CostLedger(word_cost=2, barrier_cost=5)
    m = Machine([PeState(p) for p in range(2)], word_cost=2, barrier_cost=5)
    m.run_superstep(lambda ctx: (ctx.work(3), ctx.send(1 - ctx.pe, "PartialResult", 0, 16,
                                                       mode="collective")))
    m.run_superstep(lambda ctx: None)
    led = m.ledger
    assert led.total_cost() == (3 + 2 * 2 + 5) + (0 + 0 + 5)
    assert led.total_words() == 4
    lines = led.to_tsv().splitlines()
    assert lines[0] == "superstep\tw\th\tmode_breakdown"
    assert lines[1] == "1\t3\t2\tone-sided=0;collective=4;p2p=0"
    assert len(led.since(1)) == 1

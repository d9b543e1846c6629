import random

import pytest

from dptindex.dpt import Query, build
from dptindex.global_trie import ABSENT, CANDIDATE, INTERVAL
from dptindex.index_io import dump_index, load_index
from dptindex.patricia import BACKINGS
from dptindex.text import append_sentinel, naive_occurrences
from helpers import random_patterns, random_text


@pytest.fixture(scope="module")
def banana():
    return build(b"banana", 2, 30)


def expected(t, kind, p):
    occ = naive_occurrences(t, p)
    return {"exists": bool(occ), "count": len(occ), "enumerate": occ}[kind]


def test_banana_queries(banana):
    assert banana.query_exists(b"an").value is True
    assert banana.query_count(b"an").value == 2
    assert banana.query_enumerate(b"an").value == [2, 4]
    assert banana.query_enumerate(b"banana").value == [1]
    assert banana.query_count(b"na", arrival_pe=1).value == 2


def test_absent_pattern_is_cheap(banana):
    res = banana.query_exists(b"xyz")
    assert res.value is False
    assert res.supersteps <= 2
    assert len(banana.last_ledger) <= 2
    assert banana.query_count(b"nab").value == 0


def test_verified_exists_takes_three_supersteps(banana):
    res = banana.query_exists(b"an", arrival_pe=1)
    assert res.detail["route"] == CANDIDATE
    assert res.value is True and res.supersteps == 3
    assert len(banana.last_ledger) == 3


def test_interval_answers_at_arrival():
    idx = build(b"aaaa", 2, 30)
    res = idx.query_exists(b"a")
    assert res.detail["route"] == INTERVAL and res.detail["l"] < res.detail["r"]
    assert res.value is True and res.supersteps == 1 and res.words == 0
    assert idx.query_enumerate(b"a", 1).value == [1, 2, 3, 4]
    assert idx.query_count(b"aa", 1).value == 3


def test_counting_formula_with_interior_pes():
    t = append_sentinel(b"a" * 40)
    idx = build(t, 5, 30)
    res = idx.query_count(b"aa", arrival_pe=2)
    d = res.detail
    assert d["r"] - d["l"] >= 2
    interior = sum(n for _, n in idx.blocks[d["l"] + 1:d["r"]])
    assert d["interior"] == interior
    assert res.value == d["occ_l"] + d["occ_r"] + interior == 39
    assert idx.query_enumerate(b"aa", 0).value == list(range(1, 40))


def test_label_batch_trades_supersteps_for_space():
    t = random_text(random.Random(4), 300, 4)
    one = build(t, 4, 10, label_batch=1)
    unbounded = build(t, 4, 10)
    for a, b in zip(one.machine.states, unbounded.machine.states):
        assert a.trie.to_bytes() == b.trie.to_bytes()
        assert a.gt.to_bytes() == b.gt.to_bytes()
    assert len(one.build_ledger) > len(unbounded.build_ledger)
    mid = build(t, 4, 10, label_batch=50)
    needed = max(s.trie.node_count - 1 for s in mid.machine.states)
    assert len(mid.build_ledger) == -(-needed // 50) + 4


def test_replicated_global_trie_and_leaf_counts():
    t = random_text(random.Random(5), 500, 2)
    idx = build(t, 6, 12)
    ref = idx.global_trie(0).to_bytes()
    for pe in range(idx.c):
        assert idx.global_trie(pe).to_bytes() == ref
        assert idx.trie(pe).leaf_count == idx.blocks[pe][1]


def test_batch_matches_individual_runs():
    rng = random.Random(6)
    t = random_text(rng, 800, 4)
    idx = build(t, 8, 12)
    pats = random_patterns(rng, t, 100, 12)
    queries = [Query(rng.choice(["exists", "count", "enumerate"]), p, rng.randrange(8))
               for p in pats]
    batch = idx.query_batch(queries)
    assert len(idx.last_ledger) <= 4
    for q, r in zip(queries, batch):
        single = idx.query_batch([q])[0]
        assert (single.value, single.supersteps, single.words) == (r.value, r.supersteps,
                                                                   r.words)
        assert r.value == expected(t, q.kind, q.pattern)


def test_histogram_counts_forwarded_queries():
    rng = random.Random(7)
    t = random_text(rng, 600, 4)
    idx = build(t, 4, 10)
    hot = random_patterns(rng, t, 3, 10)
    queries = [Query("count", hot[k % 3], k % 4) for k in range(60)]
    results = idx.query_batch(queries)
    direct = [0] * 4
    for r in results:
        d = r.detail
        if d["route"] == ABSENT:
            continue
        direct[d["l"]] += 1
        if d["route"] == INTERVAL and d["l"] < d["r"]:
            direct[d["r"]] += 1
    assert idx.last_histogram == direct
    assert len({r.value for r in results[::3]}) == 1


@pytest.mark.parametrize("kind", ["exists", "count", "enumerate"])
def test_backing_independence(kind):
    rng = random.Random(8)
    t = random_text(rng, 400, 2)
    pats = random_patterns(rng, t, 40, 8, 2)
    queries = [Query(kind, p, k % 3) for k, p in enumerate(pats)]
    runs = []
    for b in BACKINGS:
        res = build(t, 3, 8, b).query_batch(queries)
        runs.append([(r.value, r.supersteps, r.words) for r in res])
    assert all(run == runs[0] for run in runs)


def test_errors_are_per_query(banana):
    res = banana.query_batch([Query("count", b"an"), Query("count", b"x" * 31),
                              Query("count", b""), Query("count", b"a\x00"),
                              Query("count", b"na", 1)])
    assert [r.value for r in res] == [2, None, None, None, 2]
    assert res[1].error.startswith("PatternTooLong")
    assert res[2].error.startswith("EmptyPattern")
    assert res[3].error.startswith("SentinelInInput")


def test_bad_arguments():
    with pytest.raises(ValueError):
        build(b"abc", 5, 3)
    with pytest.raises(ValueError):
        build(b"abc", 2, 0)
    with pytest.raises(ValueError):
        build(b"abc", 2, 3, backing="trie")
    idx = build(b"abc", 2, 3)
    with pytest.raises(ValueError):
        idx.query_batch([Query("list", b"a")])
    with pytest.raises(ValueError):
        idx.query_batch([Query("count", b"a", 2)])


def test_audit_mode_full_protocol():
    rng = random.Random(9)
    t = random_text(rng, 300, 4)
    idx = build(t, 5, 8, "louds", audit=True)
    for kind in ("exists", "count", "enumerate"):
        for p in random_patterns(rng, t, 10, 8):
            assert idx.query_batch([Query(kind, p, 2)])[0].value == expected(t, kind, p)


def test_enumerate_words_bound():
    t = append_sentinel(b"ab" * 200)
    idx = build(t, 4, 30)
    res = idx.query_enumerate(b"ab", 0)
    assert res.value == list(range(1, 400, 2))
    interior = res.detail["interior"]
    occ_ends = res.detail["occ_l"] + res.detail["occ_r"]
    assert res.words <= 4 * 2 + 16 + occ_ends + 2 + interior + 4 * (res.detail["r"] - res.detail["l"])


def test_single_pe_and_one_suffix_per_pe():
    for c in (1, 7):
        idx = build(b"banana", c, 30)
        t = append_sentinel(b"banana")
        for p in (b"a", b"an", b"ana", b"nan", b"banana", b"x", b"aa"):
            for kind in ("exists", "count", "enumerate"):
                assert idx.query_batch([Query(kind, p, c - 1)])[0].value == expected(t, kind, p)


def test_round_trip_through_bytes():
    rng = random.Random(10)
    t = random_text(rng, 500, 4)
    for b in BACKINGS:
        idx = build(t, 3, 10, b)
        back = load_index(dump_index(idx))
        assert dump_index(back) == dump_index(idx)
        pats = random_patterns(rng, t, 20, 10)
        q = [Query("enumerate", p, 1) for p in pats]
        assert [r.value for r in back.query_batch(q)] == [r.value for r in idx.query_batch(q)]

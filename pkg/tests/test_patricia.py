import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dptindex.exceptions import MalformedLcp
from dptindex.patricia import (BACKINGS, MATCHED, NO_EDGE, BlindSearchResult, LocalCharProvider,
                               blind_search, build_patricia, build_patricia_dfuds_streaming,
                               build_shape, leaf_range_count, trie_from_bytes, verify_occurrence)
from dptindex.succinct import PointerTree, encode
from dptindex.text import append_sentinel, build_lcp_array, build_suffix_array
from helpers import random_text

BANANA = append_sentinel(b"banana")
SA = np.array([7, 6, 4, 2, 1, 5, 3])
LCP = np.array([0, 0, 1, 3, 0, 0, 2])


def banana(backing="pointer"):
    return build_patricia(SA, LCP, LocalCharProvider(BANANA), backing)


def children_chars(trie):
    r = trie.root()
    return sorted(c for c in range(256) if trie.find_child(r, c) is not None)


@pytest.mark.parametrize("backing", BACKINGS)
def test_banana_root_edges(backing):
    trie = banana(backing)
    assert children_chars(trie) == [0, ord("a"), ord("b"), ord("n")]
    a = trie.find_child(trie.root(), ord("a"))
    assert trie.depth(a) == 1
    ana = trie.find_child(a, ord("n"))
    assert trie.depth(ana) == 3
    assert trie.leaf_count == 7


def test_banana_shape():
    shape = build_shape(SA, LCP, BANANA.size)
    # root, $, a, a$, ana, ana$, anana$, banana$, na, na$, nana$
    assert shape.degrees.tolist() == [4, 0, 2, 0, 2, 0, 0, 0, 2, 0, 0]
    assert shape.depths.tolist() == [0, 1, 1, 2, 3, 4, 6, 7, 2, 3, 5]
    assert shape.leaf_rank[shape.degrees == 0].tolist() == list(range(7))


def test_single_suffix_block():
    trie = build_patricia(np.array([3]), np.array([2]), LocalCharProvider(BANANA))
    assert trie.node_count == 2
    assert trie.root_depth == 0
    res = trie.blind_search(b"nana")
    assert res.outcome == MATCHED and res.witness == 3


def test_unary_spine():
    t = append_sentinel(b"aaa")
    shape = build_shape(np.array([4, 3, 2, 1]), np.array([0, 0, 1, 2]), t.size)
    internal = shape.depths[shape.degrees > 0].tolist()
    assert internal == [0, 1, 2]


@pytest.mark.parametrize("backing", BACKINGS)
def test_blind_search_examples(backing):
    trie = banana(backing)
    res = blind_search(trie, b"nan")
    assert res.outcome == MATCHED and res.witness == 3
    lo, hi = res.leaf_range
    assert SA[lo:hi + 1].tolist() == [3]
    assert blind_search(trie, b"z").outcome == NO_EDGE
    res = blind_search(trie, b"ana")
    assert leaf_range_count(res) == 2
    assert sorted(SA[res.leaf_range[0]:res.leaf_range[1] + 1].tolist()) == [2, 4]


def test_blind_search_false_positive_is_caught_by_verification():
    trie = banana()
    # "anb" follows a -> n and lands on the "ana" node without reading the 'b'
    res = blind_search(trie, b"anb")
    assert res.outcome == MATCHED
    fetched = BANANA.substring(res.witness, 3)
    assert not verify_occurrence(b"anb", fetched)
    assert blind_search(trie, b"aa").outcome == NO_EDGE


def test_verify_occurrence():
    assert verify_occurrence(b"nan", b"nan")
    assert not verify_occurrence(b"nan", b"nab")
    assert not verify_occurrence(b"nan", b"na")


def test_leaf_range_count():
    assert leaf_range_count(BlindSearchResult(MATCHED, 1, (2, 4))) == 3
    assert leaf_range_count(BlindSearchResult(MATCHED, 1, (5, 5))) == 1
    with pytest.raises(ValueError):
        leaf_range_count(BlindSearchResult(NO_EDGE))


def test_malformed_lcp():
    prov = LocalCharProvider(BANANA)
    with pytest.raises(MalformedLcp):
        build_patricia(SA, np.array([0, 0, 1, 9, 0, 0, 2]), prov)
    with pytest.raises(MalformedLcp):
        build_patricia(SA, LCP[:3], prov)
    with pytest.raises(MalformedLcp):
        build_patricia_dfuds_streaming(SA, np.array([0, 0, 1, 3, -1, 0, 2]), prov)


def test_streaming_dfuds_banana():
    prov = LocalCharProvider(BANANA)
    two_phase = build_patricia(SA, LCP, prov, "pointer")
    tree = PointerTree.from_preorder_degrees(two_phase.degrees().tolist())
    stream = build_patricia_dfuds_streaming(SA, LCP, prov)
    assert stream.tree.bv == encode(tree, "dfuds").bv
    single = build_patricia_dfuds_streaming(np.array([3]), np.array([0]), prov)
    assert single.tree.bv.to_string() == "1100"


def random_block(rng):
    t = random_text(rng, rng.randint(1, 120), rng.choice([2, 4, 26]))
    sa = build_suffix_array(t)
    lcp = build_lcp_array(t, sa)
    a = rng.randrange(len(sa))
    b = rng.randint(a + 1, len(sa))
    return t, sa[a:b], lcp[a:b], a + 1


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10**9))
def test_oracle_equivalence_all_backings(seed):
    rng = random.Random(seed)
    t, sa, lcp, start = random_block(rng)
    prov = LocalCharProvider(t)
    tries = [build_patricia(sa, lcp, prov, b, (0, start, None)) for b in BACKINGS]
    raw = t.data[:-1]
    for _ in range(15):
        m = rng.randint(1, 8)
        i = rng.randrange(max(1, len(raw)))
        p = raw[i:i + m] if rng.random() < 0.7 and raw else bytes(rng.choice(b"abcz")
                                                                   for _ in range(m))
        expected = sorted(int(s) for s in sa if t.data[s - 1:s - 1 + len(p)] == p)
        results = [tr.blind_search(p) for tr in tries]
        assert all(r == results[0] for r in results)
        for tr, res in zip(tries, results):
            found = []
            if res.matched and verify_occurrence(p, t.substring(res.witness, len(p))):
                lo, hi = res.leaf_range
                found = sorted(tr.sa_block[lo:hi + 1].tolist())
            assert found == expected


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_streaming_dfuds_bit_identical(seed):
    rng = random.Random(seed)
    t, sa, lcp, _ = random_block(rng)
    prov = LocalCharProvider(t)
    ref = build_patricia(sa, lcp, prov, "dfuds")
    got = build_patricia_dfuds_streaming(sa, lcp, prov)
    assert got.tree.bv == ref.tree.bv
    assert list(got.depths) == list(ref.depths)
    assert got.chars == ref.chars


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_construction_character_requests(seed):
    rng = random.Random(seed)
    t, sa, lcp, _ = random_block(rng)
    prov = LocalCharProvider(t)
    trie = build_patricia(sa, lcp, prov)
    assert len(prov.requests) == trie.node_count - 1
    assert len(prov.requests) < 2 * len(sa)
    for pos, ch in zip(prov.requests, LocalCharProvider(t).fetch(prov.requests)):
        assert t.char(pos) == ch


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_structural_invariants(seed):
    rng = random.Random(seed)
    t, sa, lcp, _ = random_block(rng)
    shape = build_shape(sa, lcp, t.size)
    tree = PointerTree.from_preorder_degrees(shape.degrees.tolist())
    chars = LocalCharProvider(t).fetch(shape.label_pos[1:]) if len(shape.label_pos) > 1 else b""
    for u, kids in enumerate(tree.children):
        for v in kids:
            assert shape.depths[v] > shape.depths[u]
        firsts = [chars[v - 1] for v in kids]
        assert firsts == sorted(set(firsts))
    expected_root = int(lcp[1:].min()) if len(sa) > 1 else 0
    assert shape.depths[0] == expected_root


@pytest.mark.parametrize("backing", BACKINGS)
def test_serialization_round_trip(backing):
    rng = random.Random(11)
    t, sa, lcp, start = random_block(rng)
    trie = build_patricia(sa, lcp, LocalCharProvider(t), backing, (3, start, None))
    buf = trie.to_bytes()
    back, end = trie_from_bytes(buf, 0, sa)
    assert end == len(buf)
    assert back.to_bytes() == buf
    assert back.block_meta == (3, start, len(sa))
    for p in (b"a", b"ab", b"ca", b"zz"):
        assert back.blind_search(p) == trie.blind_search(p)


def test_size_report_components():
    t = random_text(random.Random(2), 3000, 4)
    sa = build_suffix_array(t)
    lcp = build_lcp_array(t, sa)
    prov = LocalCharProvider(t)
    reports = {b: build_patricia(sa, lcp, prov, b).size_report(40) for b in BACKINGS}
    for r in reports.values():
        parts = r["tree_bits"] + r["depth_bits"] + r["label_bits"] + r["leaf_bits"]
        assert r["trie_bits"] == parts
        assert r["sa_bits"] == 40 * len(sa)
    assert reports["louds"]["trie_bits"] < reports["pointer"]["trie_bits"] / 2
    assert reports["dfuds"]["trie_bits"] <= reports["louds"]["trie_bits"]

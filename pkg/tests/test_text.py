import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dptindex.exceptions import OutOfRange, SentinelInInput
from dptindex.text import (Text, append_sentinel, build_lcp_array, build_suffix_array, lcp_pair,
                           naive_lcp_array, naive_occurrences, naive_suffix_array)

texts = st.binary(min_size=0, max_size=80).map(lambda b: bytes(x % 4 + 97 for x in b))


def test_banana_arrays():
    t = append_sentinel(b"banana")
    sa = build_suffix_array(t)
    assert sa.tolist() == [7, 6, 4, 2, 1, 5, 3]
    assert build_lcp_array(t, sa).tolist() == [0, 0, 1, 3, 0, 0, 2]


def test_sentinel_rejected():
    with pytest.raises(SentinelInInput):
        append_sentinel(b"ab\x00c")


def test_empty_text_is_just_the_sentinel():
    t = append_sentinel(b"")
    assert t.n == 0 and t.size == 1
    assert build_suffix_array(t).tolist() == [1]


def test_positions_are_one_based():
    t = append_sentinel(b"abc")
    assert t.char(1) == ord("a") and t.char(4) == 0
    with pytest.raises(OutOfRange):
        t.char(0)
    with pytest.raises(OutOfRange):
        t.char(5)
    assert t.substring(3, 4) == b"c\x00\x00\x00"


def test_lcp_pair():
    t = append_sentinel(b"banana")
    assert lcp_pair(t, 2, 4) == 3
    assert lcp_pair(t, 1, 1) == 7
    with pytest.raises(OutOfRange):
        lcp_pair(t, 0, 3)


def test_naive_occurrences():
    t = append_sentinel(b"banana")
    assert naive_occurrences(t, b"an") == [2, 4]
    assert naive_occurrences(t, b"banana") == [1]
    assert naive_occurrences(t, b"x") == []


@settings(max_examples=200, deadline=None)
@given(texts)
def test_suffix_array_matches_sorting(raw):
    t = append_sentinel(raw)
    sa = build_suffix_array(t)
    assert np.array_equal(sa, naive_suffix_array(t))
    assert np.array_equal(build_lcp_array(t, sa), naive_lcp_array(t, sa))


@settings(max_examples=50, deadline=None)
@given(st.binary(min_size=1, max_size=60).filter(lambda b: 0 not in b))
def test_suffix_array_full_byte_range(raw):
    t = Text(raw + b"\x00")
    assert np.array_equal(build_suffix_array(t), naive_suffix_array(t))

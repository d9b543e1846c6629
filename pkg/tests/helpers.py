"""Shared generators and brute-force oracles for the test suite."""

import random

import numpy as np

from dptindex.bsp import block_table
from dptindex.succinct import PointerTree
from dptindex.text import append_sentinel, naive_occurrences

ALPHABETS = {2: b"ab", 4: b"acgt", 26: b"abcdefghijklmnopqrstuvwxyz"}


def random_text(rng: random.Random, n: int, sigma: int = 4):
    alpha = ALPHABETS[sigma]
    return append_sentinel(bytes(rng.choice(alpha) for _ in range(n)))


def random_patterns(rng: random.Random, t, k: int, pmax: int, sigma: int = 4):
    """Half substrings of the text, half random strings (mostly absent)."""
    raw = t.data[:-1]
    alpha = ALPHABETS[sigma]
    out = []
    for j in range(k):
        m = rng.randint(1, pmax)
        if j % 2 == 0 and raw:
            i = rng.randrange(len(raw))
            p = raw[i:i + m]
        else:
            p = bytes(rng.choice(alpha + b"z") for _ in range(m))
        out.append(p)
    return out


def random_tree(rng: random.Random, size: int) -> PointerTree:
    """Random ordinal tree: each new node picks an earlier parent."""
    children = [[] for _ in range(size)]
    for v in range(1, size):
        u = rng.randrange(max(0, v - rng.choice([1, 3, v])), v)
        children[u].append(v)
    # renumber in preorder so node ids are canonical
    order = []
    stack = [0]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(reversed(children[u]))
    new = {u: i for i, u in enumerate(order)}
    out = [[] for _ in range(size)]
    for u in range(size):
        out[new[u]] = [new[v] for v in children[u]]
    return PointerTree(out)


def occurrence_pes(t, sa, c, p):
    """PEs whose SA block holds at least one occurrence, with per-PE counts."""
    blocks = block_table(t.size, c)
    rank = np.empty(len(sa) + 1, dtype=np.int64)
    rank[np.asarray(sa)] = np.arange(1, len(sa) + 1)
    counts = [0] * c
    for pos in naive_occurrences(t, p):
        r = rank[pos]
        q = max(i for i, (s, _) in enumerate(blocks) if s <= r)
        counts[q] += 1
    return counts


def navigation_mismatches(tree: PointerTree, st) -> list:
    """Nodes where succinct child/outdegree disagree with pointer navigation."""
    inv = {int(u): k for k, u in enumerate(st.order)}
    pos = {u: st.position(inv[u]) for u in range(len(tree))}
    bad = []
    for u in range(len(tree)):
        x = pos[u]
        kids = tree.children[u]
        if st.outdegree(x) != len(kids) or st.is_leaf(x) != (not kids):
            bad.append((u, "outdegree"))
            continue
        for i, v in enumerate(kids, 1):
            if st.child(x, i) != pos[v]:
                bad.append((u, i))
    return bad

"""Binary index file: one header, the global trie once, then one section per PE.

Layout (all integers little-endian)::

    magic "DPTIDX\\0\\1"  u32 version
    u64 n  u32 c  u32 pmax  u8 backing  u8 sentinel  u64 label_batch (0 = unbounded)
    f64 word_cost  f64 barrier_cost
    c x (u64 block_start, u64 block_len)
    u64 len + global trie record
    c x (u64 len + local trie record)
    c x (u64 m, i64[m] sa, i64[m] lcp, u64 len, text slice bytes)
"""

from __future__ import annotations

import struct

import numpy as np

from .bsp import Machine, PeState
from .global_trie import GlobalTrie
from .patricia import BACKINGS, trie_from_bytes
from .text import SENTINEL

MAGIC = b"DPTIDX\x00\x01"
VERSION = 1
_HEAD = struct.Struct("<QIIBBQdd")


class IndexFormatError(ValueError):
    pass


def dump_index(idx) -> bytes:
    states = idx.machine.states
    ledger = idx.machine.ledger
    parts = [MAGIC, struct.pack("<I", VERSION),
             _HEAD.pack(idx.n, idx.c, idx.pmax, BACKINGS.index(idx.backing), SENTINEL,
                        idx.label_batch or 0, float(ledger.word_cost),
                        float(ledger.barrier_cost))]
    for start, length in idx.blocks:
        parts.append(struct.pack("<QQ", start, length))
    gt = states[0].gt.to_bytes()
    parts += [struct.pack("<Q", len(gt)), gt]
    for st in states:
        rec = st.trie.to_bytes()
        parts += [struct.pack("<Q", len(rec)), rec]
    for st in states:
        m = len(st.sa_block)
        parts += [struct.pack("<Q", m), np.asarray(st.sa_block, dtype="<i8").tobytes(),
                  np.asarray(st.lcp_block, dtype="<i8").tobytes(),
                  struct.pack("<Q", len(st.text_slice)), bytes(st.text_slice)]
    return b"".join(parts)


def load_index(buf: bytes):
    from .dpt import DptIndex

    if buf[:8] != MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    (version,) = struct.unpack_from("<I", buf, 8)
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    off = 12
    n, c, pmax, tag, sentinel, batch, g, L = _HEAD.unpack_from(buf, off)
    off += _HEAD.size
    if sentinel != SENTINEL:
        raise IndexFormatError(f"index uses sentinel {sentinel}, expected {SENTINEL}")
    blocks = []
    for _ in range(c):
        blocks.append(struct.unpack_from("<QQ", buf, off))
        off += 16
    blocks = tuple(blocks)
    (glen,) = struct.unpack_from("<Q", buf, off)
    off += 8
    gt_bytes = buf[off:off + glen]
    off += glen
    trie_recs = []
    for _ in range(c):
        (tlen,) = struct.unpack_from("<Q", buf, off)
        off += 8
        trie_recs.append(buf[off:off + tlen])
        off += tlen
    states = []
    for p in range(c):
        (m,) = struct.unpack_from("<Q", buf, off)
        off += 8
        sa = np.frombuffer(buf, dtype="<i8", count=m, offset=off).astype(np.int64)
        off += 8 * m
        lcp = np.frombuffer(buf, dtype="<i8", count=m, offset=off).astype(np.int64)
        off += 8 * m
        (tl,) = struct.unpack_from("<Q", buf, off)
        off += 8
        text_slice = bytes(buf[off:off + tl])
        off += tl
        trie, _ = trie_from_bytes(trie_recs[p], 0, sa)
        gt, _ = GlobalTrie.from_bytes(gt_bytes)
        start = blocks[p][0]
        states.append(PeState(p, n=n, c=c, pmax=pmax, blocks=blocks, block_start=start,
                              sa_block=sa, lcp_block=lcp, text_lo=start,
                              text_slice=text_slice, trie=trie, gt=gt))
    if off != len(buf):
        raise IndexFormatError(f"{len(buf) - off} trailing bytes after the last section")
    machine = Machine(states, word_cost=g, barrier_cost=L)
    return DptIndex(machine, BACKINGS[tag], pmax, batch or None)


def save(idx, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_index(idx))


def load(path):
    with open(path, "rb") as fh:
        return load_index(fh.read())

"""Command line interface: ``build``, ``query`` and ``bench``."""

from __future__ import annotations

import argparse
import csv
import io
import random
import sys

from . import index_io
from .dpt import QUERY_KINDS, Query, build
from .dsa import build_dsa
from .exceptions import SentinelInInput
from .patricia import BACKINGS
from .text import append_sentinel, build_lcp_array, build_suffix_array

BENCH_COLUMNS = ("c", "index", "backing", "phase", "supersteps", "total_words", "max_pe_words",
                 "remote_fetches", "bits_per_char")


def _int_list(s: str) -> list[int]:
    try:
        out = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def read_queries(data: bytes) -> list[bytes]:
    """One pattern per newline-terminated line; no other normalization."""
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    return lines


def format_result(res) -> str:
    if res.error is not None:
        return f"ERROR {res.error}"
    if res.kind == "exists":
        return f"EXISTS {'true' if res.value else 'false'}"
    if res.kind == "count":
        return f"COUNT {res.value}"
    return ("ENUM " + ",".join(str(v) for v in res.value)) if res.value else "ENUM"


def _cost_common(p):
    p.add_argument("--word-cost", type=float, default=1.0, metavar="G",
                   help="cost per communicated word (reporting only)")
    p.add_argument("--barrier-cost", type=float, default=1.0, metavar="L",
                   help="cost per barrier (reporting only)")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dptindex",
                                 description="Distributed Patricia trie index on a simulated "
                                             "BSP machine.")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an index file from a corpus")
    b.add_argument("corpus")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--pe-count", type=_positive, default=4)
    b.add_argument("--pmax", type=_positive, default=30)
    b.add_argument("--backing", choices=BACKINGS, default="pointer")
    b.add_argument("--label-batch", type=_positive, default=None, metavar="S")
    _cost_common(b)

    q = sub.add_parser("query", help="answer a file of patterns against an index")
    q.add_argument("index")
    q.add_argument("queries")
    q.add_argument("--kind", choices=QUERY_KINDS, default="count")
    q.add_argument("--seed", type=int, default=0, help="seed for arrival PE assignment")
    q.add_argument("--word-cost", type=float, default=None, metavar="G")
    q.add_argument("--barrier-cost", type=float, default=None, metavar="L")

    s = sub.add_parser("bench", help="compare the trie index with the suffix array baseline")
    s.add_argument("corpus", nargs="?", default=None)
    s.add_argument("--synthetic", type=_positive, default=20000, metavar="N",
                   help="length of a random corpus used when no corpus is given")
    s.add_argument("--alphabet", default="acgt")
    s.add_argument("--pe-count", type=_int_list, default=[1, 2, 4, 8], metavar="C1,C2,...")
    s.add_argument("--queries-per-pe", type=int, default=20)
    s.add_argument("--kind", choices=QUERY_KINDS, default="count")
    s.add_argument("--pattern-length", type=_positive, default=8)
    s.add_argument("--pmax", type=_positive, default=30)
    s.add_argument("--backing", choices=BACKINGS, default="pointer")
    s.add_argument("--label-batch", type=_positive, default=None, metavar="S")
    s.add_argument("--prune-len", type=_int_list, default=[5], metavar="L1,L2,...")
    s.add_argument("--seed", type=int, default=0)
    _cost_common(s)
    return ap


def cmd_build(args, out) -> int:
    with open(args.corpus, "rb") as fh:
        raw = fh.read()
    idx = build(raw, args.pe_count, args.pmax, args.backing, args.label_batch,
                args.word_cost, args.barrier_cost)
    index_io.save(idx, args.output)
    out.write(idx.build_ledger.to_tsv())
    return 0


def cmd_query(args, out) -> int:
    idx = index_io.load(args.index)
    if args.word_cost is not None:
        idx.machine.ledger.word_cost = args.word_cost
    if args.barrier_cost is not None:
        idx.machine.ledger.barrier_cost = args.barrier_cost
    with open(args.queries, "rb") as fh:
        patterns = read_queries(fh.read())
    rng = random.Random(args.seed)
    queries = [Query(args.kind, p, rng.randrange(idx.c)) for p in patterns]
    results = idx.query_batch(queries)
    for r in results:
        out.write(format_result(r) + "\n")
    out.write("# ledger\n")
    out.write(idx.last_ledger.to_tsv())
    out.write("# histogram\npe\tqueries\n")
    for pe, k in enumerate(idx.last_histogram):
        out.write(f"{pe}\t{k}\n")
    return 0


def _sample_patterns(raw: bytes, k: int, length: int, rng: random.Random) -> list[bytes]:
    pats = []
    for _ in range(k):
        i = rng.randrange(len(raw))
        pats.append(raw[i:i + length])
    return pats


def _row(c, index, backing, phase, ledger, bits):
    return {"c": c, "index": index, "backing": backing, "phase": phase,
            "supersteps": ledger.supersteps, "total_words": ledger.total_words(),
            "max_pe_words": ledger.max_pe_words(),
            "remote_fetches": ledger.mode_words()["one-sided"],
            "bits_per_char": f"{bits:.3f}"}


def cmd_bench(args, out) -> int:
    rng = random.Random(args.seed)
    if args.corpus is not None:
        with open(args.corpus, "rb") as fh:
            raw = fh.read()
    else:
        alphabet = args.alphabet.encode()
        raw = bytes(rng.choice(alphabet) for _ in range(args.synthetic))
    text = append_sentinel(raw)
    sa = build_suffix_array(text)
    lcp = build_lcp_array(text, sa)
    n = max(1, text.n)
    writer = csv.DictWriter(out, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for c in args.pe_count:
        k = max(0, args.queries_per_pe) * c
        pats = _sample_patterns(raw, k, min(args.pattern_length, args.pmax), rng) if raw else []
        arrivals = [rng.randrange(c) for _ in pats]
        idx = build(text, c, args.pmax, args.backing, args.label_batch, args.word_cost,
                    args.barrier_cost, sa=sa, lcp=lcp)
        bits = idx.size_report()["bits_per_char"]
        writer.writerow(_row(c, "dpt", args.backing, "build", idx.build_ledger, bits))
        if pats:
            idx.query_batch([Query(args.kind, p, a) for p, a in zip(pats, arrivals)])
            writer.writerow(_row(c, "dpt", args.backing, "query", idx.last_ledger, bits))
        for ell in args.prune_len:
            dsa = build_dsa(text, c, ell, args.word_cost, args.barrier_cost, sa=sa, lcp=lcp)
            dbits = (40 * (text.n + 1) + 8 * ell * (text.n + 1)) / n
            tag = f"prune={ell}"
            writer.writerow(_row(c, "dsa", tag, "build", dsa.build_ledger, dbits))
            if pats and args.kind == "count":
                dsa.count_batch(list(zip(pats, arrivals)))
                writer.writerow(_row(c, "dsa", tag, "query", dsa.last_ledger, dbits))
    return 0


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = make_parser().parse_args(argv)
    handlers = {"build": cmd_build, "query": cmd_query, "bench": cmd_bench}
    try:
        return handlers[args.command](args, out)
    except (OSError, SentinelInInput, ValueError) as exc:
        sys.stderr.write(f"dptindex: error: {exc}\n")
        return 2


def run(argv) -> str:
    """Run the CLI in-process and return what it printed."""
    buf = io.StringIO()
    code = main(argv, buf)
    if code:
        raise SystemExit(code)
    return buf.getvalue()

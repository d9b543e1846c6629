"""Estimator-style wrappers: ``fit`` builds the index, ``predict`` counts patterns."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import index_io
from .dpt import Query, build
from .dsa import build_dsa
from .patricia import BACKINGS
from .validation import check_choice, check_int, check_patterns, check_text


class DistributedPatriciaTrie(BaseEstimator):
    """Distributed Patricia trie over ``n_pes`` simulated PEs.

    Parameters
    ----------
    n_pes : int
        Number of processing elements.
    pmax : int
        Longest supported pattern.
    backing : {"pointer", "louds", "dfuds", "bp"}
        Representation of the local tries.
    label_batch : int or None
        Label characters a PE may request per construction superstep.
    word_cost, barrier_cost : float
        ``G`` and ``L`` of the cost model; reporting only.
    """

    def __init__(self, n_pes=4, pmax=30, backing="pointer", label_batch=None, word_cost=1,
                 barrier_cost=1):
        self.n_pes = n_pes
        self.pmax = pmax
        self.backing = backing
        self.label_batch = label_batch
        self.word_cost = word_cost
        self.barrier_cost = barrier_cost

    def fit(self, X, y=None, suffix_array=None, lcp_array=None):
        text = check_text(X)
        c = check_int("n_pes", self.n_pes, 1)
        pmax = check_int("pmax", self.pmax, 1)
        batch = check_int("label_batch", self.label_batch, 1, allow_none=True)
        check_choice("backing", self.backing, BACKINGS)
        self.index_ = build(text, c, pmax, self.backing, batch, self.word_cost,
                            self.barrier_cost, sa=suffix_array, lcp=lcp_array)
        self.n_chars_ = text.n
        return self

    def _arrivals(self, k, arrival_pe):
        if arrival_pe is None:
            return [i % self.index_.c for i in range(k)]
        return [arrival_pe] * k

    def predict(self, patterns, arrival_pe=None) -> np.ndarray:
        """Occurrence counts, one per pattern."""
        check_is_fitted(self, "index_")
        pats = check_patterns(patterns, self.index_.pmax)
        res = self.query_batch([("count", p, a)
                                for p, a in zip(pats, self._arrivals(len(pats), arrival_pe))])
        return np.asarray([r.value for r in res], dtype=np.int64)

    def query_exists(self, p, arrival_pe=0) -> bool:
        check_is_fitted(self, "index_")
        return self._one("exists", p, arrival_pe)

    def query_count(self, p, arrival_pe=0) -> int:
        check_is_fitted(self, "index_")
        return self._one("count", p, arrival_pe)

    def query_enumerate(self, p, arrival_pe=0) -> list[int]:
        check_is_fitted(self, "index_")
        return self._one("enumerate", p, arrival_pe)

    def _one(self, kind, p, arrival_pe):
        (pat,) = check_patterns([p], self.index_.pmax)
        return self.index_.query_batch([Query(kind, pat, arrival_pe)])[0].value

    def query_batch(self, queries):
        """``queries``: iterable of ``(kind, pattern, arrival_pe)`` or Query objects."""
        check_is_fitted(self, "index_")
        qs = [q if isinstance(q, Query) else Query(q[0], check_patterns([q[1]])[0], q[2])
              for q in queries]
        return self.index_.query_batch(qs)

    def size_report(self, pos_width=40) -> dict:
        check_is_fitted(self, "index_")
        return self.index_.size_report(pos_width)

    def save(self, path) -> None:
        check_is_fitted(self, "index_")
        index_io.save(self.index_, path)

    @classmethod
    def load(cls, path) -> "DistributedPatriciaTrie":
        idx = index_io.load(path)
        g, L = idx.machine.ledger.word_cost, idx.machine.ledger.barrier_cost
        est = cls(n_pes=idx.c, pmax=idx.pmax, backing=idx.backing, label_batch=idx.label_batch,
                  word_cost=g, barrier_cost=L)
        est.index_ = idx
        est.n_chars_ = idx.n
        return est


class DistributedSuffixArray(BaseEstimator):
    """Block-partitioned suffix array answering counts by distributed binary search."""

    def __init__(self, n_pes=4, prune_len=5, word_cost=1, barrier_cost=1):
        self.n_pes = n_pes
        self.prune_len = prune_len
        self.word_cost = word_cost
        self.barrier_cost = barrier_cost

    def fit(self, X, y=None, suffix_array=None, lcp_array=None):
        text = check_text(X)
        c = check_int("n_pes", self.n_pes, 1)
        ell = check_int("prune_len", self.prune_len, 0)
        self.index_ = build_dsa(text, c, ell, self.word_cost, self.barrier_cost,
                                sa=suffix_array, lcp=lcp_array)
        self.n_chars_ = text.n
        return self

    def predict(self, patterns, arrival_pe=None) -> np.ndarray:
        check_is_fitted(self, "index_")
        pats = check_patterns(patterns)
        c = self.index_.c
        arr = [i % c if arrival_pe is None else arrival_pe for i in range(len(pats))]
        res = self.index_.count_batch(list(zip(pats, arr)))
        return np.asarray([r.count for r in res], dtype=np.int64)

    def count(self, p, arrival_pe=0):
        check_is_fitted(self, "index_")
        (pat,) = check_patterns([p])
        return self.index_.count(pat, arrival_pe)

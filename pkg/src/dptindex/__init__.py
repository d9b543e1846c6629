"""Distributed Patricia trie text index on a simulated BSP machine."""

from .bsp import CostLedger, Machine, distribute
from .dpt import DptIndex, Query, QueryResult, build
from .dsa import DsaIndex, build_dsa, dsa_count
from .estimators import DistributedPatriciaTrie, DistributedSuffixArray
from .global_trie import GlobalTrie, RoutingResult, build_global_trie, gather_boundaries
from .patricia import (BlindSearchResult, PatriciaTrie, blind_search, build_patricia,
                       build_patricia_dfuds_streaming, leaf_range_count, verify_occurrence)
from .succinct import BitVector, PointerTree, SuccinctTree, encode
from .text import Text, append_sentinel, build_lcp_array, build_suffix_array

__version__ = "0.1.0"

__all__ = [
    "BitVector", "BlindSearchResult", "CostLedger", "DistributedPatriciaTrie",
    "DistributedSuffixArray", "DptIndex", "DsaIndex", "GlobalTrie", "Machine", "PatriciaTrie",
    "PointerTree", "Query", "QueryResult", "RoutingResult", "SuccinctTree", "Text",
    "append_sentinel", "blind_search", "build", "build_dsa", "build_global_trie",
    "build_lcp_array", "build_patricia", "build_patricia_dfuds_streaming", "build_suffix_array",
    "distribute", "dsa_count", "encode", "gather_boundaries", "leaf_range_count",
    "verify_occurrence",
]

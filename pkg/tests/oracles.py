"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path


def all_strings(alphabet, max_len: int) -> list[tuple]:
    out = [()]
    for n in range(1, max_len + 1):
        out.extend(itertools.product(alphabet, repeat=n))
    return out


def edit_graph_distances(alphabet, max_len: int) -> tuple[list[tuple], np.ndarray]:
    """All-pairs minimum edit-script length by breadth-first search.

    Nodes are every sequence over ``alphabet`` up to ``max_len``; an edge is
    one insertion, deletion or substitution. Intermediate sequences longer
    than both endpoints are never needed on a shortest script, so the bounded
    graph gives exact distances.
    """
    nodes = all_strings(alphabet, max_len)
    index = {s: i for i, s in enumerate(nodes)}
    rows, cols = [], []
    for s, i in index.items():
        for pos in range(len(s)):
            rows.append(i)
            cols.append(index[s[:pos] + s[pos + 1:]])  # deletion
            for sym in alphabet:
                if sym != s[pos]:
                    rows.append(i)
                    cols.append(index[s[:pos] + (sym,) + s[pos + 1:]])  # substitution
        if len(s) < max_len:
            for pos in range(len(s) + 1):
                for sym in alphabet:
                    rows.append(i)
                    cols.append(index[s[:pos] + (sym,) + s[pos:]])  # insertion
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(nodes))).tocsr()
    dist = shortest_path(graph, method="D", unweighted=True, directed=True)
    return nodes, dist.astype(np.int64)


def brute_force_edit_scripts(a, b) -> int:
    """Tiny exhaustive search for very short inputs (used for hand examples)."""
    best = max(len(a), len(b))
    frontier = {tuple(a)}
    seen = set(frontier)
    target = tuple(b)
    symbols = set(a) | set(b)
    for depth in range(best + 1):
        if target in frontier:
            return depth
        nxt = set()
        for s in frontier:
            for pos in range(len(s) + 1):
                for sym in symbols:
                    nxt.add(s[:pos] + (sym,) + s[pos:])
                if pos < len(s):
                    nxt.add(s[:pos] + s[pos + 1:])
                    for sym in symbols:
                        nxt.add(s[:pos] + (sym,) + s[pos + 1:])
        frontier = nxt - seen
        seen |= nxt
    return best


def ngram_counts(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts

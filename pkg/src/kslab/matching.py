"""Exact maximum matching in general graphs.

``max_matching`` implements the classic augmenting-path algorithm with
blossom contraction (O(V*E) per augmentation, O(V^3) worst case) and
returns a certificate set of disjoint edges.  ``brute_matching`` is the
independent test oracle: an exhaustive maximum over all matchings, feasible
up to 24 edges.

Loops can never be matched and parallel edges never help, so both
operations work on the simplified graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import MultiGraph

__all__ = ["MatchingResult", "max_matching", "brute_matching"]


@dataclass
class MatchingResult:
    """A maximum matching: its size and the matched pairs."""

    size: int
    pairs: list[tuple[int, int]]


def _adjacency(g: MultiGraph) -> list[list[int]]:
    simple = g.simplified()
    adj: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in simple.edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    return adj


def max_matching(g: MultiGraph) -> MatchingResult:
    """Maximum size of a set of disjoint edges, with a certificate."""
    n = g.n
    adj = _adjacency(g)
    match = [-1] * n

    # greedy warm start; augmenting passes below only fix what remains
    for v in range(n):
        if match[v] == -1:
            for u in adj[v]:
                if match[u] == -1:
                    match[v] = u
                    match[u] = v
                    break

    p = [-1] * n
    base = list(range(n))

    def lca(a: int, b: int) -> int:
        seen = [False] * n
        while True:
            a = base[a]
            seen[a] = True
            if match[a] == -1:
                break
            a = p[match[a]]
        while True:
            b = base[b]
            if seen[b]:
                return b
            b = p[match[b]]

    def mark_path(v: int, b: int, child: int, blossom: list[bool]) -> None:
        while base[v] != b:
            blossom[base[v]] = True
            blossom[base[match[v]]] = True
            p[v] = child
            child = match[v]
            v = p[match[v]]

    def find_augmenting_path(root: int) -> int:
        nonlocal p, base
        used = [False] * n
        p = [-1] * n
        base = list(range(n))
        used[root] = True
        q = deque([root])
        while q:
            v = q.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and p[match[to]] != -1):
                    # odd cycle: contract the blossom to its base
                    curbase = lca(v, to)
                    blossom = [False] * n
                    mark_path(v, curbase, to, blossom)
                    mark_path(to, curbase, v, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = curbase
                            if not used[i]:
                                used[i] = True
                                q.append(i)
                elif p[to] == -1:
                    p[to] = v
                    if match[to] == -1:
                        return to  # exposed vertex: augmenting path found
                    used[match[to]] = True
                    q.append(match[to])
        return -1

    for root in range(n):
        if match[root] != -1 or not adj[root]:
            continue
        finish = find_augmenting_path(root)
        while finish != -1:
            pv = p[finish]
            ppv = match[pv]
            match[finish] = pv
            match[pv] = finish
            finish = ppv

    pairs = [(v, match[v]) for v in range(n) if match[v] > v]
    return MatchingResult(size=len(pairs), pairs=pairs)


def brute_matching(g: MultiGraph) -> int:
    """Exhaustive maximum matching size; requires at most 24 distinct edges.

    Computed as a memoized search over subsets of matched vertices, which
    visits every matching implicitly.
    """
    simple = g.simplified()
    edges = simple.edges
    if edges.shape[0] > 24:
        raise ValueError("brute_matching accepts at most 24 edges after collapsing")
    verts = np.unique(edges) if edges.size else np.array([], dtype=np.int64)
    index = {int(v): i for i, v in enumerate(verts)}
    k = len(verts)
    adj_mask = [0] * k
    for u, v in edges.tolist():
        adj_mask[index[u]] |= 1 << index[v]
        adj_mask[index[v]] |= 1 << index[u]
    full = (1 << k) - 1

    memo: dict[int, int] = {}

    # lowest unmatched vertex drives the recursion
    def solve(mask: int) -> int:
        if mask == full:
            return 0
        cached = memo.get(mask)
        if cached is not None:
            return cached
        rem = ~mask & full
        v = (rem & -rem).bit_length() - 1
        result = solve(mask | (1 << v))  # v stays unmatched
        partners = adj_mask[v] & rem
        while partners:
            low = partners & -partners
            u = low.bit_length() - 1
            partners ^= low
            result = max(result, 1 + solve(mask | (1 << v) | (1 << u)))
        memo[mask] = result
        return result

    return solve(0)

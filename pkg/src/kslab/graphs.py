"""Random (multi)graph models and degree-sequence utilities.

Four generators cover the distributions the experiments need: the two
Erdos-Renyi models (independent edges with probability ``c/n``, and a
uniform set of exactly ``m`` edges), the with-replacement random multigraph
``m`` i.i.d. uniform vertex pairs, and the configuration model for a
prescribed degree sequence.  A constructive coupling of two configuration
models bounds their edit distance by the degree discrepancy plus one.

Conventions: vertices are ``0..n-1``; an edge is an unordered pair stored
as ``(min, max)``; a loop ``(v, v)`` contributes 2 to the degree of ``v``
(so the degree sum is exactly twice the edge count, and a loop endpoint is
never a leaf).
"""

from __future__ import annotations

import io
import math
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .rng import RngStream

__all__ = [
    "MultiGraph",
    "SimpleGraph",
    "gen_gnp",
    "gen_gnm",
    "gen_multigraph",
    "gen_configuration",
    "couple_configurations",
    "edit_distance",
    "is_good_sequence",
    "write_graph",
    "read_graph",
]

DegreeSequence = Union[Sequence[int], np.ndarray]


def _as_edge_array(edges: Union[np.ndarray, Iterable[tuple[int, int]]]) -> np.ndarray:
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edges must be an (m, 2) array of vertex pairs")
    return arr


class MultiGraph:
    """An edge multiset on ``n`` vertices; loops and parallel edges allowed.

    ``edges`` is an ``(m, 2)`` int64 array with each row normalized to
    ``u <= v``.  Row order is preserved (it records generation order) but
    carries no meaning: two graphs are equal iff their edge multisets are.
    """

    __slots__ = ("n", "edges")

    def __init__(self, n: int, edges: Union[np.ndarray, Iterable[tuple[int, int]]] = ()):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        arr = _as_edge_array(edges)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range [0, n)")
        self.n = int(n)
        self.edges = np.sort(arr, axis=1)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def degrees(self) -> np.ndarray:
        """Degree of every vertex; a loop counts 2."""
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def has_loop(self) -> bool:
        e = self.edges
        return bool(e.size) and bool(np.any(e[:, 0] == e[:, 1]))

    def is_simple(self) -> bool:
        """No loops and no repeated edge."""
        e = self.edges
        if e.size == 0:
            return True
        if np.any(e[:, 0] == e[:, 1]):
            return False
        codes = self.edge_codes()
        return np.unique(codes).size == codes.size

    def edge_codes(self) -> np.ndarray:
        """Each edge packed as ``u * n + v`` (with ``u <= v``)."""
        e = self.edges
        return e[:, 0] * np.int64(self.n) + e[:, 1]

    def simplified(self) -> "SimpleGraph":
        """Underlying simple graph: loops dropped, multiplicities collapsed."""
        e = self.edges
        e = e[e[:, 0] != e[:, 1]]
        if e.size:
            codes = np.unique(e[:, 0] * np.int64(self.n) + e[:, 1])
            e = np.stack([codes // self.n, codes % self.n], axis=1)
        return SimpleGraph(self.n, e)

    def copy(self) -> "MultiGraph":
        return type(self)(self.n, self.edges.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MultiGraph):
            return NotImplemented
        if self.n != other.n or self.num_edges != other.num_edges:
            return False
        return bool(np.array_equal(np.sort(self.edge_codes()),
                                   np.sort(other.edge_codes())))

    def __hash__(self) -> int:
        return hash((self.n, tuple(np.sort(self.edge_codes()).tolist())))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, m={self.num_edges})"


class SimpleGraph(MultiGraph):
    """A MultiGraph constrained to have no loops and no parallel edges."""

    __slots__ = ()

    def __init__(self, n: int, edges: Union[np.ndarray, Iterable[tuple[int, int]]] = ()):
        super().__init__(n, edges)
        e = self.edges
        if e.size:
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("simple graph cannot contain loops")
            codes = self.edge_codes()
            if np.unique(codes).size != codes.size:
                raise ValueError("simple graph cannot contain parallel edges")


def _num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _decode_pair_codes(codes: np.ndarray) -> np.ndarray:
    """Inverse of code = v*(v-1)/2 + u for 0 <= u < v."""
    k = codes.astype(np.float64)
    v = np.floor((np.sqrt(8.0 * k + 1.0) + 1.0) / 2.0).astype(np.int64)
    # guard against float rounding on the triangular-number boundary
    v = np.where(v * (v - 1) // 2 > codes, v - 1, v)
    v = np.where((v + 1) * v // 2 <= codes, v + 1, v)
    u = codes - v * (v - 1) // 2
    return np.stack([u, v], axis=1)


def _sample_distinct_codes(num_codes: int, m: int, gen: np.random.Generator) -> np.ndarray:
    """First m distinct values of an i.i.d. uniform stream on [0, num_codes).

    Stopping at the m-th distinct value makes the resulting set exactly
    uniform over m-subsets, without materializing the population.
    """
    if m == 0:
        return np.empty(0, dtype=np.int64)
    have = np.empty(0, dtype=np.int64)
    while have.size < m:
        draw = gen.integers(0, num_codes, size=m - have.size, dtype=np.int64)
        have = np.unique(np.concatenate([have, draw]))
    return have


def gen_gnp(n: int, c: float, rng: RngStream) -> SimpleGraph:
    """Erdos-Renyi graph: each of the C(n,2) edges present independently
    with probability c/n.

    Sampled by drawing the edge count from its binomial law and then a
    uniform set of that many edges, which is the same distribution.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0 < c <= n):
        raise ValueError("need 0 < c <= n so that c/n is a probability")
    gen = rng.generator()
    m = int(gen.binomial(_num_pairs(n), c / n))
    codes = _sample_distinct_codes(_num_pairs(n), m, gen)
    return SimpleGraph(n, _decode_pair_codes(codes))


def gen_gnm(n: int, m: int, rng: RngStream) -> SimpleGraph:
    """Uniformly random simple graph with exactly m edges."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if not (0 <= m <= _num_pairs(n)):
        raise ValueError(f"m must be in [0, C(n,2)] = [0, {_num_pairs(n)}]")
    codes = _sample_distinct_codes(_num_pairs(n), m, rng.generator())
    return SimpleGraph(n, _decode_pair_codes(codes))


def gen_multigraph(n: int, m: int, rng: RngStream) -> MultiGraph:
    """Random multigraph: m i.i.d. uniform pairs of (not necessarily
    distinct) vertices, sampled with replacement."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 0:
        raise ValueError("m must be >= 0")
    pairs = rng.generator().integers(0, n, size=(m, 2), dtype=np.int64)
    return MultiGraph(n, pairs)


def _check_degrees(d: DegreeSequence) -> np.ndarray:
    arr = np.asarray(d, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("degree sequence must be one-dimensional")
    if arr.size and arr.min() < 0:
        raise ValueError("degrees must be nonnegative")
    return arr


def _contract_stub_matching(stub_vertex: np.ndarray, matched_stubs: np.ndarray) -> np.ndarray:
    pairs = stub_vertex[matched_stubs]
    return pairs.reshape(-1, 2)


def gen_configuration(d: DegreeSequence, rng: RngStream) -> MultiGraph:
    """Configuration model: contract a uniformly random perfect matching on
    the degree stubs of ``d``.

    A uniform matching is realized by a uniform permutation of the stubs,
    paired consecutively.
    """
    degrees = _check_degrees(d)
    total = int(degrees.sum())
    if total % 2 != 0:
        raise ValueError("degree sum must be even to form a configuration")
    stub_vertex = np.repeat(np.arange(degrees.size, dtype=np.int64), degrees)
    perm = rng.generator().permutation(total)
    return MultiGraph(degrees.size, _contract_stub_matching(stub_vertex, perm))


def couple_configurations(
    d: DegreeSequence, d2: DegreeSequence, rng: RngStream
) -> tuple[MultiGraph, MultiGraph]:
    """Sample a coupled pair (G, G2) with G a uniform configuration for ``d``
    and G2 one for ``d2``, with edit distance at most sum|d_v - d2_v| + 1.

    Construction: take the pointwise maximum sequence (padded by one stub at
    vertex 0 if its sum is odd), label the stubs each sequence does not own
    as bad for it, draw a uniform matching of all stubs, and for each
    sequence delete matches touching its bad stubs and uniformly re-match
    the orphaned good stubs.  Each marginal is an exact uniform
    configuration.
    """
    da = _check_degrees(d)
    db = _check_degrees(d2)
    if da.size != db.size:
        raise ValueError("degree sequences must have the same length")
    if int(da.sum()) % 2 != 0 or int(db.sum()) % 2 != 0:
        raise ValueError("both degree sums must be even")
    dmax = np.maximum(da, db)
    if da.size == 0:
        return MultiGraph(0), MultiGraph(0)
    if int(dmax.sum()) % 2 != 0:
        dmax = dmax.copy()
        dmax[0] += 1

    nverts = da.size
    total = int(dmax.sum())
    stub_vertex = np.repeat(np.arange(nverts, dtype=np.int64), dmax)
    # position of each stub within its vertex bucket: stub is good for a
    # sequence iff its in-bucket position is below that sequence's degree
    offsets = np.concatenate([[0], np.cumsum(dmax)[:-1]])
    in_bucket = np.arange(total, dtype=np.int64) - offsets[stub_vertex]
    good_a = in_bucket < da[stub_vertex]
    good_b = in_bucket < db[stub_vertex]

    gen = rng.generator()
    perm = gen.permutation(total)

    def restrict(good: np.ndarray) -> np.ndarray:
        pairs = perm.reshape(-1, 2)
        keep = good[pairs[:, 0]] & good[pairs[:, 1]]
        kept = pairs[keep]
        # good stubs orphaned by deleted matches, re-matched uniformly
        orphan_mask = good.copy()
        orphan_mask[kept.ravel()] = False
        orphans = np.flatnonzero(orphan_mask).astype(np.int64)
        orphans = gen.permutation(orphans)
        matched = np.concatenate([kept.ravel(), orphans])
        return _contract_stub_matching(stub_vertex, matched)

    ga = MultiGraph(nverts, restrict(good_a))
    gb = MultiGraph(nverts, restrict(good_b))
    return ga, gb


def edit_distance(g: MultiGraph, g2: MultiGraph) -> int:
    """Size of the multiset symmetric difference of the edge multisets:
    the number of edges to add and remove to turn one graph into the other."""
    if g.n != g2.n:
        raise ValueError("edit distance requires the same vertex set")
    counts: dict[int, int] = {}
    for code in g.edge_codes().tolist():
        counts[code] = counts.get(code, 0) + 1
    for code in g2.edge_codes().tolist():
        counts[code] = counts.get(code, 0) - 1
    return sum(abs(v) for v in counts.values())


def is_good_sequence(d: DegreeSequence, n: int, c: float) -> bool:
    """Whether ``d`` has the degree statistics typical of average degree c
    on n vertices: max degree at most log2(n), degree sum within n^(3/4) of
    c*n, and second factorial moment within n^(3/4) of c^2*n.

    Base-2 logarithm for the max-degree cap: with the natural log the cap
    sits below the realized maximum degree of a fair fraction of sparse
    samples even at n = 1e5, while any base leaves the asymptotics intact.
    """
    degrees = _check_degrees(d)
    if n < 2:
        return False
    if degrees.size and degrees.max() > math.log2(n):
        return False
    s1 = float(degrees.sum())
    s2 = float((degrees * (degrees - 1)).sum())
    bound = n ** 0.75
    return abs(s1 - c * n) <= bound and abs(s2 - c * c * n) <= bound


def write_graph(g: MultiGraph, f: Union[str, IO[str]]) -> None:
    """Serialize as text: first line ``n m``, then one ``u v`` line per edge
    (loops as ``v v``; repeated lines encode multiplicity)."""
    own = isinstance(f, str)
    fh: IO[str] = open(f, "w") if own else f  # type: ignore[arg-type]
    try:
        fh.write(f"{g.n} {g.num_edges}\n")
        for u, v in g.edges.tolist():
            fh.write(f"{u} {v}\n")
    finally:
        if own:
            fh.close()


def read_graph(f: Union[str, IO[str]], simple: bool = False) -> MultiGraph:
    """Parse the text format written by :func:`write_graph`."""
    own = isinstance(f, str)
    fh: IO[str] = open(f) if own else f  # type: ignore[arg-type]
    try:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("expected header line 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = np.empty((m, 2), dtype=np.int64)
        for i in range(m):
            parts = fh.readline().split()
            if len(parts) != 2:
                raise ValueError(f"expected edge line 'u v' at edge {i}")
            edges[i] = (int(parts[0]), int(parts[1]))
    finally:
        if own:
            fh.close()
    return SimpleGraph(n, edges) if simple else MultiGraph(n, edges)


def graph_to_text(g: MultiGraph) -> str:
    buf = io.StringIO()
    write_graph(g, buf)
    return buf.getvalue()


def graph_from_text(text: str, simple: bool = False) -> MultiGraph:
    return read_graph(io.StringIO(text), simple=simple)

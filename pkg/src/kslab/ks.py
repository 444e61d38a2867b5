"""The Karp-Sipser leaf-removal process.

Repeatedly pick a uniformly random degree-1 vertex and delete it together
with its unique neighbour (and all edges at that neighbour), until a stop
rule fires: no leaves remain, the live edge count drops to ``delta * n``,
or a step budget is exhausted.  The per-step statistics tracked are

  X1 = number of degree-1 vertices,   X2 = number of vertices of degree >= 2,
  X3 = number of live edges,          X4 = number of steps taken,

with isolated vertices excluded throughout.  One leaf removal decreases the
matching number of the graph by exactly 1 and its adjacency rank by exactly
2, which the oracles module exploits.

Two interchangeable kernels execute the loop: a compiled Cython kernel and
a pure-Python twin.  They consume randomness identically, so traces are
bit-for-bit reproducible from an RngStream regardless of kernel; ``engine=
"auto"`` picks the compiled one when it is importable (set KSLAB_PURE_PYTHON=1
to force the fallback).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import IO, Optional, Union

import numpy as np

from . import _ks_python
from .graphs import MultiGraph, SimpleGraph
from .rng import RngStream

try:
    from . import _kernels

    HAVE_COMPILED_KERNELS = True
except ImportError:  # build without the extension: pure-Python twin only
    _kernels = None
    HAVE_COMPILED_KERNELS = False

__all__ = [
    "StopRule",
    "KsTrace",
    "KsCheckpoint",
    "KsState",
    "run_ks",
    "ks_step",
    "degree_histogram",
    "HAVE_COMPILED_KERNELS",
    "active_engine",
]

_KIND_TO_CODE = {"no-leaves": 0, "edges-at-most": 1, "step-limit": 2}
_REASON_NAMES = {0: "no-leaves", 1: "edge-threshold", 2: "step-limit"}


@dataclass(frozen=True)
class StopRule:
    """When to stop the process.  Exactly one kind is active.

    ``edges_at_most(delta)`` stops at the first step index (possibly 0) at
    which the live edge count is at most ``delta * n``, with n the original
    vertex count; if leaves run out first the trace reports reason
    ``no-leaves`` instead.
    """

    kind: str
    delta: float = 0.0
    k: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KIND_TO_CODE:
            raise ValueError(f"unknown stop rule kind {self.kind!r}")
        if self.kind == "edges-at-most" and not (0 < self.delta <= 1):
            raise ValueError("edges-at-most requires delta in (0, 1]")
        if self.kind == "step-limit" and self.k < 0:
            raise ValueError("step-limit requires k >= 0")

    @classmethod
    def no_leaves(cls) -> "StopRule":
        return cls("no-leaves")

    @classmethod
    def edges_at_most(cls, delta: float) -> "StopRule":
        return cls("edges-at-most", delta=delta)

    @classmethod
    def step_limit(cls, k: int) -> "StopRule":
        return cls("step-limit", k=k)


@dataclass
class KsCheckpoint:
    """State captured the first time the live edge count fell to a threshold."""

    step: int
    stats: tuple[int, int, int, int]  # (X1, X2, X3, X4) at the checkpoint
    degree_histogram: np.ndarray  # hist[d] = number of live degree-d vertices


@dataclass
class KsTrace:
    """Everything recorded from one leaf-removal run."""

    n: int
    snapshots: np.ndarray  # (T+1, 4): (X1, X2, X3, X4), row 0 = initial state
    stop_reason: str
    core: MultiGraph  # live graph minus isolated vertices, compacted labels
    core_vertex_ids: np.ndarray  # original label of each core vertex
    steps: Optional[np.ndarray]  # (T, 2): removed (leaf, neighbour), or None
    checkpoint: Optional[KsCheckpoint] = None

    @property
    def num_steps(self) -> int:
        return int(self.snapshots[-1, 3])

    @property
    def final_stats(self) -> tuple[int, int, int, int]:
        return tuple(int(x) for x in self.snapshots[-1])

    def write_csv(self, f: Union[str, IO[str]]) -> None:
        own = isinstance(f, str)
        fh: IO[str] = open(f, "w") if own else f  # type: ignore[arg-type]
        try:
            fh.write("step,X1,X2,X3,X4\n")
            for row in self.snapshots:
                fh.write(f"{row[3]},{row[0]},{row[1]},{row[2]},{row[3]}\n")
        finally:
            if own:
                fh.close()


def _incidence(g: MultiGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Edge endpoint arrays plus a CSR incidence map vertex -> edge ids.

    Entries within a vertex are in edge order (a loop contributes its edge
    id twice in a row).  Both kernels rely on this exact layout.
    """
    e = g.edges
    m = e.shape[0]
    ends = e.ravel()
    order = np.argsort(ends, kind="stable")
    inc_ids = np.repeat(np.arange(m, dtype=np.int64), 2)[order]
    counts = np.bincount(ends, minlength=g.n).astype(np.int64)
    inc_off = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(counts)])
    eu = np.ascontiguousarray(e[:, 0])
    ev = np.ascontiguousarray(e[:, 1])
    return eu, ev, inc_off, inc_ids, counts


def active_engine(engine: str = "auto") -> str:
    """Resolve an engine request to 'compiled' or 'python'."""
    if engine == "auto":
        if os.environ.get("KSLAB_PURE_PYTHON"):
            return "python"
        return "compiled" if HAVE_COMPILED_KERNELS else "python"
    if engine == "compiled":
        if not HAVE_COMPILED_KERNELS:
            raise RuntimeError("compiled kernels are not available in this build")
        return "compiled"
    if engine == "python":
        return "python"
    raise ValueError(f"unknown engine {engine!r}")


def _core_from_state(
    g: MultiGraph, deg: np.ndarray, alive: np.ndarray
) -> tuple[MultiGraph, np.ndarray]:
    ids = np.flatnonzero(deg > 0).astype(np.int64)
    relabel = np.zeros(g.n, dtype=np.int64)
    relabel[ids] = np.arange(ids.size, dtype=np.int64)
    edges = g.edges[alive.astype(bool)]
    cls = SimpleGraph if isinstance(g, SimpleGraph) else MultiGraph
    return cls(ids.size, relabel[edges]), ids


def _histogram_from_degrees(deg: np.ndarray) -> np.ndarray:
    live = deg[deg > 0]
    if live.size == 0:
        return np.zeros(1, dtype=np.int64)
    return np.bincount(live).astype(np.int64)


def run_ks(
    g: MultiGraph,
    stop: StopRule,
    rng: RngStream,
    *,
    engine: str = "auto",
    record_log: bool = True,
    checkpoint_delta: Optional[float] = None,
) -> KsTrace:
    """Run leaf removal on a copy of ``g`` until ``stop`` fires.

    ``checkpoint_delta`` additionally captures the state the first time the
    live edge count is at most ``checkpoint_delta * n`` without stopping
    there, so one run can report both the stopped and the final process.
    """
    kind = _KIND_TO_CODE[stop.kind]
    edge_limit = int(np.floor(stop.delta * g.n)) if stop.kind == "edges-at-most" else -1
    step_limit = stop.k if stop.kind == "step-limit" else -1
    checkpoint_edges = (
        int(np.floor(checkpoint_delta * g.n)) if checkpoint_delta is not None else -1
    )
    eu, ev, inc_off, inc_ids, deg0 = _incidence(g)
    bitgen = rng.bit_generator()

    if active_engine(engine) == "compiled":
        runner = _kernels.run_ks
    else:
        runner = _ks_python.run
    snaps, log, reason, deg, alive, cp_step, cp_deg, cp_snap = runner(
        g.n, eu, ev, inc_off, inc_ids, deg0,
        kind, edge_limit, step_limit, checkpoint_edges, bitgen, record_log,
    )

    core, ids = _core_from_state(g, deg, alive)
    checkpoint = None
    if cp_step >= 0:
        checkpoint = KsCheckpoint(
            step=int(cp_step),
            stats=tuple(int(x) for x in cp_snap),
            degree_histogram=_histogram_from_degrees(cp_deg),
        )
    return KsTrace(
        n=g.n,
        snapshots=snaps,
        stop_reason=_REASON_NAMES[reason],
        core=core,
        core_vertex_ids=ids,
        steps=log,
        checkpoint=checkpoint,
    )


class KsState:
    """Incremental interface to the process, one ks_step at a time.

    Wraps the pure-Python kernel state; use :func:`run_ks` for whole runs.
    """

    def __init__(self, g: MultiGraph):
        eu, ev, inc_off, inc_ids, deg0 = _incidence(g)
        self._graph = g
        self._state = _ks_python.LeafRemovalState(g.n, eu, ev, inc_off, inc_ids, deg0)
        self._raw: Optional[_ks_python.RawSource] = None
        self._raw_key: Optional[RngStream] = None
        self.removed: list[tuple[int, int]] = []

    @classmethod
    def from_graph(cls, g: MultiGraph) -> "KsState":
        return cls(g)

    @property
    def x1(self) -> int:
        return self._state.n1

    @property
    def x2(self) -> int:
        return self._state.n2

    @property
    def x3(self) -> int:
        return self._state.edges_live

    @property
    def x4(self) -> int:
        return self._state.steps

    def stats(self) -> tuple[int, int, int, int]:
        return self._state.stats()

    def has_leaves(self) -> bool:
        return self._state.n1 > 0

    def _source_for(self, rng: RngStream) -> _ks_python.RawSource:
        # the same stream object continues where it left off between steps
        if self._raw is None or self._raw_key != rng:
            self._raw = _ks_python.RawSource(rng.bit_generator())
            self._raw_key = rng
        return self._raw

    def core(self) -> MultiGraph:
        graph, _ = _core_from_state(
            self._graph, self._state.degrees_array(), self._state.alive_array()
        )
        return graph


def ks_step(state: KsState, rng: RngStream) -> KsState:
    """Remove one uniformly random leaf and its unique neighbour.

    Raises if no leaf exists.  Mutates and returns ``state``; repeated calls
    with the same stream continue that stream deterministically.
    """
    if state.x1 < 1:
        raise ValueError("no degree-1 vertex: the process cannot step")
    raw = state._source_for(rng)
    state.removed.append(state._state.step(raw))
    return state


def degree_histogram(state: Union[KsState, MultiGraph]) -> dict[int, int]:
    """Histogram of live degrees, d >= 1 only."""
    if isinstance(state, KsState):
        deg = state._state.degrees_array()
    else:
        deg = state.degrees()
    live = deg[deg > 0]
    values, counts = np.unique(live, return_counts=True)
    return {int(d): int(c) for d, c in zip(values, counts)}

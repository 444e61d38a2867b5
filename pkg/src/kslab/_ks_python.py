"""Pure-Python leaf-removal kernel.

This is the reference twin of the compiled kernel in ``_kernels.pyx``: both
consume the same raw 64-bit stream and reduce it to bounded integers with
the same rejection rule, so they produce bit-identical traces from the same
RngStream.  Keep the two in lockstep when changing either.

Randomness protocol (shared):
  * one uniform index in [0, k) is drawn per leaf selection attempt;
  * k <= 1 consumes nothing and yields 0;
  * otherwise raw words x are drawn until x < 2**64 - (2**64 % k), and
    x % k is returned (exact uniformity, negligible rejection rate).

The leaf pool is append-only with swap-remove: vertices are appended when
their degree becomes 1 and stale entries (degree no longer 1) are discarded
lazily when drawn, so total pool work is O(n).
"""

from __future__ import annotations

import numpy as np

STOP_NO_LEAVES = 0
STOP_EDGE_THRESHOLD = 1
STOP_STEP_LIMIT = 2

_RAW_CHUNK = 1024
_TWO64 = 1 << 64


class RawSource:
    """Buffered raw 64-bit words from a numpy BitGenerator."""

    def __init__(self, bitgen):
        self._bitgen = bitgen
        self._buf: list[int] = []
        self._pos = 0

    def next64(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bitgen.random_raw(_RAW_CHUNK).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def draw(self, k: int) -> int:
        """Uniform integer in [0, k) per the shared protocol."""
        if k <= 1:
            return 0
        threshold = _TWO64 - (_TWO64 % k)
        while True:
            x = self.next64()
            if x < threshold:
                return x % k


class LeafRemovalState:
    """Mutable process state: live degrees, leaf pool and the X counters."""

    def __init__(self, n, eu, ev, inc_off, inc_ids, deg0):
        self.n = n
        self.eu = eu.tolist() if isinstance(eu, np.ndarray) else list(eu)
        self.ev = ev.tolist() if isinstance(ev, np.ndarray) else list(ev)
        self.inc_off = (inc_off.tolist() if isinstance(inc_off, np.ndarray)
                        else list(inc_off))
        self.inc_ids = (inc_ids.tolist() if isinstance(inc_ids, np.ndarray)
                        else list(inc_ids))
        self.deg = deg0.tolist() if isinstance(deg0, np.ndarray) else list(deg0)
        self.m = len(self.eu)
        self.alive = [1] * self.m
        self.cur = self.inc_off[:n]  # per-vertex scan cursor into inc_ids
        self.pool = [v for v in range(n) if self.deg[v] == 1]
        self.n1 = len(self.pool)
        self.n2 = sum(1 for v in range(n) if self.deg[v] >= 2)
        self.edges_live = self.m
        self.steps = 0

    def stats(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.edges_live, self.steps)

    def step(self, raw: RawSource) -> tuple[int, int]:
        """One leaf removal; returns the removed (leaf, neighbour) pair.

        The caller must ensure a leaf exists (n1 >= 1).
        """
        deg = self.deg
        alive = self.alive
        pool = self.pool
        inc_ids = self.inc_ids
        eu = self.eu
        ev = self.ev

        # uniform live leaf, discarding stale pool entries as drawn
        while True:
            idx = raw.draw(len(pool))
            v = pool[idx]
            pool[idx] = pool[-1]
            pool.pop()
            if deg[v] == 1:
                break

        # the unique live edge of v, skipping edges that died earlier
        p = self.cur[v]
        while not alive[inc_ids[p]]:
            p += 1
        self.cur[v] = p
        j = inc_ids[p]
        w = ev[j] if eu[j] == v else eu[j]

        # w leaves the counters as a whole; its neighbours degrade edge by edge
        if deg[w] == 1:
            self.n1 -= 1
        else:
            self.n2 -= 1
        n1 = self.n1
        n2 = self.n2
        edges_live = self.edges_live
        p = self.cur[w]
        end = self.inc_off[w + 1]
        while p < end:
            j = inc_ids[p]
            p += 1
            if not alive[j]:
                continue
            alive[j] = 0
            edges_live -= 1
            x = ev[j] if eu[j] == w else eu[j]
            if x == w:
                continue  # loop at w dies with w
            dx = deg[x]
            deg[x] = dx - 1
            if dx == 2:
                n2 -= 1
                n1 += 1
                pool.append(x)
            elif dx == 1:
                n1 -= 1  # x is now isolated (this handles v itself)
        self.cur[w] = end
        deg[w] = 0
        self.n1 = n1
        self.n2 = n2
        self.edges_live = edges_live
        self.steps += 1
        return v, w

    def degrees_array(self) -> np.ndarray:
        return np.array(self.deg, dtype=np.int64)

    def alive_array(self) -> np.ndarray:
        return np.array(self.alive, dtype=np.uint8)


def run(
    n,
    eu,
    ev,
    inc_off,
    inc_ids,
    deg0,
    stop_kind,
    edge_limit,
    step_limit,
    checkpoint_edges,
    bitgen,
    record_log,
):
    """Run leaf removal to the requested stop; same contract as the
    compiled kernel (see ks.run_ks for the public wrapper)."""
    state = LeafRemovalState(n, eu, ev, inc_off, inc_ids, deg0)
    raw = RawSource(bitgen)

    max_steps = min(state.m, n // 2)
    snaps = np.empty((max_steps + 1, 4), dtype=np.int64)
    snaps[0] = state.stats()
    log = np.empty((max_steps, 2), dtype=np.int64) if record_log else None

    cp_step = -1
    cp_deg = None
    cp_snap = None
    reason = None

    while True:
        # stop / checkpoint checks (also before the first step)
        if checkpoint_edges >= 0 and cp_step < 0 and state.edges_live <= checkpoint_edges:
            cp_step = state.steps
            cp_deg = state.degrees_array()
            cp_snap = state.stats()
        if stop_kind == STOP_EDGE_THRESHOLD and state.edges_live <= edge_limit:
            reason = STOP_EDGE_THRESHOLD
            break
        if stop_kind == STOP_STEP_LIMIT and state.steps >= step_limit:
            reason = STOP_STEP_LIMIT
            break
        if state.n1 == 0:
            reason = STOP_NO_LEAVES
            break

        v, w = state.step(raw)
        snaps[state.steps] = state.stats()
        if record_log:
            log[state.steps - 1] = (v, w)

    steps = state.steps
    return (
        snaps[: steps + 1],
        log[:steps] if record_log else None,
        reason,
        state.degrees_array(),
        state.alive_array(),
        cp_step,
        cp_deg,
        cp_snap,
    )

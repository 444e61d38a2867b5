"""Exact rank of adjacency matrices.

The default mode reduces the 0/1 adjacency matrix modulo a 61-bit prime and
eliminates over GF(p); this equals the rational rank unless the prime
divides a specific nonzero minor, an event with probability on the order of
rank * 2**-61 for a uniformly drawn prime.  Pass ``verify=True`` to rerun
with an independent prime.  Rational mode is exact fraction-free (Bareiss)
elimination over the integers, limited to n <= 64.

Only simple loop-free graphs are accepted: adjacency conventions for loops
and edge multiplicities are not pinned down here, and the experiments never
need them (matching on multigraphs is handled by the matching module).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .graphs import MultiGraph
from .rng import RngStream

try:
    from . import _kernels
except ImportError:
    _kernels = None

__all__ = ["RankResult", "adjacency_rank", "DEFAULT_PRIME"]

# Mersenne prime just below 2**61
DEFAULT_PRIME = (1 << 61) - 1

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(n: int) -> bool:
    """Miller-Rabin, deterministic for n < 3.3e24 with these bases."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime_near_2_61(rng: RngStream) -> int:
    gen = rng.generator()
    while True:
        cand = int(gen.integers(1 << 60, 1 << 61, dtype=np.uint64)) | 1
        if _is_prime(cand):
            return cand


@lru_cache(maxsize=1)
def _second_fixed_prime() -> int:
    cand = DEFAULT_PRIME - 2
    while not _is_prime(cand):
        cand -= 2
    return cand


@dataclass
class RankResult:
    """Rank over the rationals; ``prime`` is 0 in exact rational mode."""

    rank: int
    prime: int


def _adjacency_matrix(g: MultiGraph) -> np.ndarray:
    a = np.zeros((g.n, g.n), dtype=np.int64)
    e = g.edges
    if e.size:
        a[e[:, 0], e[:, 1]] = 1
        a[e[:, 1], e[:, 0]] = 1
    return a


def _rank_mod_python(a: np.ndarray, p: int) -> int:
    """Fallback GF(p) elimination on an object-dtype matrix (exact big ints)."""
    mat = a.astype(object) % p
    nrows, ncols = mat.shape
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        col = mat[r:, c]
        nz = np.flatnonzero(col != 0)
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            mat[[r, piv], c:] = mat[[piv, r], c:]
        inv = pow(int(mat[r, c]), -1, p)
        mat[r, c:] = (mat[r, c:] * inv) % p
        rows = r + 1 + np.flatnonzero(mat[r + 1:, c] != 0)
        if rows.size:
            mat[np.ix_(rows, range(c, ncols))] = (
                mat[np.ix_(rows, range(c, ncols))]
                - np.outer(mat[rows, c], mat[r, c:])
            ) % p
        r += 1
    return r


def _rank_mod(a: np.ndarray, p: int) -> int:
    use_compiled = (_kernels is not None and p < (1 << 63)
                    and not os.environ.get("KSLAB_PURE_PYTHON"))
    if use_compiled:
        return _kernels.rank_mod((a % p).astype(np.uint64), p)
    return _rank_mod_python(a, p)


def _rank_rational_bareiss(a: np.ndarray) -> int:
    """Fraction-free elimination; every division is exact (checked)."""
    mat = [[int(x) for x in row] for row in a]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    r = 0
    prev = 1
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if mat[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            mat[r], mat[piv] = mat[piv], mat[r]
        pivot = mat[r][c]
        for i in range(r + 1, nrows):
            row_i = mat[i]
            row_r = mat[r]
            fi = row_i[c]
            for j in range(c + 1, ncols):
                num = row_i[j] * pivot - fi * row_r[j]
                q, rem = divmod(num, prev)
                if rem:
                    raise ArithmeticError("non-exact division in fraction-free elimination")
                row_i[j] = q
            row_i[c] = 0
        prev = pivot
        r += 1
    return r


def adjacency_rank(
    g: MultiGraph,
    mode: str = "modular",
    *,
    rng: Optional[RngStream] = None,
    verify: bool = False,
) -> RankResult:
    """Rank over the rationals of the 0/1 adjacency matrix of a simple graph.

    mode="modular": eliminate mod a prime near 2**61 (drawn uniformly from
    ``rng`` when given, else the fixed default prime); ``verify=True``
    repeats with an independent prime and returns the larger rank.
    mode="rational": exact integer elimination, n <= 64.
    """
    if not g.is_simple():
        raise ValueError("adjacency_rank requires a simple, loop-free graph")
    a = _adjacency_matrix(g)
    if mode == "rational":
        if g.n > 64:
            raise ValueError("rational mode is limited to n <= 64")
        return RankResult(rank=_rank_rational_bareiss(a), prime=0)
    if mode != "modular":
        raise ValueError(f"unknown rank mode {mode!r}")
    p = _random_prime_near_2_61(rng) if rng is not None else DEFAULT_PRIME
    rank = _rank_mod(a, p)
    if verify:
        p2 = _random_prime_near_2_61(rng.child(1)) if rng is not None else _second_fixed_prime()
        if p2 == p:
            p2 = _second_fixed_prime()
        rank = max(rank, _rank_mod(a, p2))
    return RankResult(rank=rank, prime=p)

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: the leaf-removal loop and mod-p elimination.

The leaf-removal kernel is the compiled twin of ``_ks_python.run`` and must
stay in lockstep with it: same randomness protocol (one bounded draw per
leaf-selection attempt, k <= 1 consumes nothing, otherwise rejection below
2**64 - (2**64 % k)), same lazy leaf pool, same update order.  The test
suite asserts bit-identical traces between the two kernels.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.stdint cimport int64_t, uint8_t, uint64_t
from numpy.random cimport bitgen_t

cnp.import_array()

cdef int STOP_NO_LEAVES = 0
cdef int STOP_EDGE_THRESHOLD = 1
cdef int STOP_STEP_LIMIT = 2


cdef inline uint64_t _draw(bitgen_t *bg, uint64_t k) noexcept:
    cdef uint64_t x, r, threshold
    if k <= 1:
        return 0
    r = ((<uint64_t>0) - k) % k  # = 2**64 mod k, since 2**64 - k = 2**64 (mod k)
    if r == 0:
        return bg.next_uint64(bg.state) % k  # k divides 2**64: no rejection
    threshold = (<uint64_t>0) - r
    while True:
        x = bg.next_uint64(bg.state)
        if x < threshold:
            return x % k


def run_ks(
    int64_t n,
    cnp.ndarray[int64_t, ndim=1] eu_arr,
    cnp.ndarray[int64_t, ndim=1] ev_arr,
    cnp.ndarray[int64_t, ndim=1] inc_off_arr,
    cnp.ndarray[int64_t, ndim=1] inc_ids_arr,
    cnp.ndarray[int64_t, ndim=1] deg0_arr,
    int stop_kind,
    int64_t edge_limit,
    int64_t step_limit,
    int64_t checkpoint_edges,
    object bit_generator,
    bint record_log,
):
    """Compiled twin of ``_ks_python.run``; same arguments and returns."""
    cdef int64_t m = eu_arr.shape[0]
    cdef int64_t[:] eu = eu_arr
    cdef int64_t[:] ev = ev_arr
    cdef int64_t[:] inc_off = inc_off_arr
    cdef int64_t[:] inc_ids = inc_ids_arr

    cdef cnp.ndarray[int64_t, ndim=1] deg_arr = deg0_arr.copy()
    cdef int64_t[:] deg = deg_arr
    cdef cnp.ndarray[uint8_t, ndim=1] alive_arr = np.ones(m, dtype=np.uint8)
    cdef uint8_t[:] alive = alive_arr
    cdef cnp.ndarray[int64_t, ndim=1] cur_arr = inc_off_arr[:n].copy()
    cdef int64_t[:] cur = cur_arr
    cdef cnp.ndarray[int64_t, ndim=1] pool_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[:] pool = pool_arr

    if not PyCapsule_IsValid(bit_generator.capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator capsule")
    cdef bitgen_t *bg = <bitgen_t *>PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")

    cdef int64_t pool_len = 0
    cdef int64_t n1 = 0, n2 = 0, edges_live = m, steps = 0
    cdef int64_t v, w, x, j, p, end, dx, idx
    for v in range(n):
        if deg[v] == 1:
            pool[pool_len] = v
            pool_len += 1
            n1 += 1
        elif deg[v] >= 2:
            n2 += 1

    cdef int64_t max_steps = m if m < n // 2 else n // 2
    cdef cnp.ndarray[int64_t, ndim=2] snaps_arr = np.empty((max_steps + 1, 4),
                                                           dtype=np.int64)
    cdef int64_t[:, :] snaps = snaps_arr
    snaps[0, 0] = n1
    snaps[0, 1] = n2
    snaps[0, 2] = edges_live
    snaps[0, 3] = 0
    cdef cnp.ndarray[int64_t, ndim=2] log_arr = None
    cdef int64_t[:, :] log = None
    if record_log:
        log_arr = np.empty((max_steps, 2), dtype=np.int64)
        log = log_arr

    cdef int64_t cp_step = -1
    cdef object cp_deg = None
    cdef object cp_snap = None
    cdef int reason = -1

    while True:
        # stop / checkpoint checks (also before the first step)
        if checkpoint_edges >= 0 and cp_step < 0 and edges_live <= checkpoint_edges:
            cp_step = steps
            cp_deg = deg_arr.copy()
            cp_snap = (n1, n2, edges_live, steps)
        if stop_kind == STOP_EDGE_THRESHOLD and edges_live <= edge_limit:
            reason = STOP_EDGE_THRESHOLD
            break
        if stop_kind == STOP_STEP_LIMIT and steps >= step_limit:
            reason = STOP_STEP_LIMIT
            break
        if n1 == 0:
            reason = STOP_NO_LEAVES
            break

        while True:
            idx = <int64_t>_draw(bg, <uint64_t>pool_len)
            v = pool[idx]
            pool_len -= 1
            pool[idx] = pool[pool_len]
            if deg[v] == 1:
                break

        p = cur[v]
        while not alive[inc_ids[p]]:
            p += 1
        cur[v] = p
        j = inc_ids[p]
        w = ev[j] if eu[j] == v else eu[j]

        if deg[w] == 1:
            n1 -= 1
        else:
            n2 -= 1
        p = cur[w]
        end = inc_off[w + 1]
        while p < end:
            j = inc_ids[p]
            p += 1
            if not alive[j]:
                continue
            alive[j] = 0
            edges_live -= 1
            x = ev[j] if eu[j] == w else eu[j]
            if x == w:
                continue
            dx = deg[x]
            deg[x] = dx - 1
            if dx == 2:
                n2 -= 1
                n1 += 1
                pool[pool_len] = x
                pool_len += 1
            elif dx == 1:
                n1 -= 1
        cur[w] = end
        deg[w] = 0

        steps += 1
        snaps[steps, 0] = n1
        snaps[steps, 1] = n2
        snaps[steps, 2] = edges_live
        snaps[steps, 3] = steps
        if record_log:
            log[steps - 1, 0] = v
            log[steps - 1, 1] = w

    return (
        snaps_arr[: steps + 1],
        log_arr[:steps] if record_log else None,
        reason,
        deg_arr,
        alive_arr,
        cp_step,
        cp_deg,
        cp_snap,
    )


cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"


cdef inline uint64_t _mulmod(uint64_t a, uint64_t b, uint64_t p) noexcept:
    return <uint64_t>(((<uint128>a) * b) % p)


cdef uint64_t _powmod(uint64_t a, uint64_t e, uint64_t p) noexcept:
    cdef uint64_t r = 1
    a %= p
    while e:
        if e & 1:
            r = _mulmod(r, a, p)
        a = _mulmod(a, a, p)
        e >>= 1
    return r


def rank_mod(cnp.ndarray[uint64_t, ndim=2] mat, uint64_t p):
    """Rank of a dense matrix over GF(p) by Gaussian elimination.

    The matrix is modified in place; entries must already be reduced mod p.
    """
    cdef uint64_t[:, ::1] a = np.ascontiguousarray(mat)
    cdef int64_t nrows = a.shape[0]
    cdef int64_t ncols = a.shape[1]
    cdef int64_t r = 0, c, i, jj, piv
    cdef uint64_t inv, factor, tmp
    for c in range(ncols):
        if r == nrows:
            break
        piv = -1
        for i in range(r, nrows):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for jj in range(c, ncols):
                tmp = a[r, jj]
                a[r, jj] = a[piv, jj]
                a[piv, jj] = tmp
        inv = _powmod(a[r, c], p - 2, p)
        for i in range(r + 1, nrows):
            if a[i, c] == 0:
                continue
            factor = _mulmod(a[i, c], inv, p)
            for jj in range(c, ncols):
                a[i, jj] = (a[i, jj] + p - _mulmod(factor, a[r, jj], p)) % p
        r += 1
    return int(r)

"""Observables built on leaf removal plus the exact oracles.

One leaf-removal step lowers the matching number by exactly 1 and the
adjacency rank by exactly 2, so running the process to exhaustion and
solving only the leafless core gives exact values fast:

    nu(G) = X4 + nu(core),        rk(G) = 2*X4 + rk(core).

``alpha_c`` evaluates the closed-form limit of nu(G)/(n/2) (equivalently
rk(G)/n) for average degree c, as the global minimum over x in [0, 1] of

    2 - exp(-c*exp(-c*(1-x))) - (1 + c*(1-x)) * exp(-c*(1-x)).
"""

from __future__ import annotations

import math

from .graphs import MultiGraph
from .ks import StopRule, run_ks
from .matching import max_matching
from .rank import adjacency_rank
from .rng import RngStream

__all__ = ["alpha_c", "alpha_c_objective", "ks_accelerated"]

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def alpha_c_objective(x: float, c: float) -> float:
    """The function whose minimum over [0, 1] is alpha_c."""
    t = math.exp(-c * (1.0 - x))
    return 2.0 - math.exp(-c * t) - (1.0 + c * (1.0 - x)) * t


def _golden_section(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
    xm = 0.5 * (a + b)
    return xm, f(xm)


def alpha_c(c: float) -> float:
    """Limiting matching fraction for average degree c, to ~1e-10 absolute.

    A bracketing grid locates every local minimum candidate and golden
    section refines each; endpoints compete too.
    """
    if c <= 0:
        raise ValueError("c must be positive")

    def f(x: float) -> float:
        return alpha_c_objective(x, c)

    grid_n = 2000
    xs = [i / grid_n for i in range(grid_n + 1)]
    vals = [f(x) for x in xs]
    best = min(vals[0], vals[-1])
    for i in range(1, grid_n):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            _, fx = _golden_section(f, xs[i - 1], xs[i + 1])
            best = min(best, fx)
    return best


def ks_accelerated(
    g: MultiGraph, rng: RngStream, *, engine: str = "auto"
) -> tuple[int, int]:
    """Exact (matching number, adjacency rank) of a simple graph via leaf
    removal: solve only the leafless core, then add X4 and 2*X4."""
    if not g.is_simple():
        raise ValueError("ks_accelerated requires a simple input graph")
    trace = run_ks(g, StopRule.no_leaves(), rng, engine=engine, record_log=False)
    core = trace.core
    steps = trace.num_steps
    nu = steps + max_matching(core).size
    rk = 2 * steps + adjacency_rank(core).rank
    return nu, rk

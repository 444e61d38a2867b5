"""Deterministic fluid-limit numerics for the leaf-removal process.

The rescaled statistics (X1, X2, X3, X4)/n concentrate around a trajectory
chi(s) which is most conveniently parameterised by the truncated-Poisson
parameter z, running from c at the start down to 0 (for c <= e):

    chi1 = (z^2 - z*c*beta(z)*(1 - e^-z)) / c      beta(z) = W(c e^z)/c
    chi2 = (1 - (1+z) e^-z) * beta(z)
    chi3 = z^2 / (2c)
    chi4 = s = (c*(1 - beta(z)) - log(beta(z))^2 / 2) / c

This module evaluates chi, inverts it (z from a statistics vector, z from
the time s), and provides the jump-rate functions beta_l, the drift F, its
analytic Jacobian, the jump diffusion matrix sum_l beta_l l l^T, and the
limiting eigensystem of z^2 * dF as z -> 0.

Everything here is pure float math; covariance propagation lives in
``covariance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "FluidPoint",
    "DriftEval",
    "RateIndex",
    "EigenLimit",
    "lambert_w",
    "chi_of_z",
    "s_star",
    "z_delta",
    "s_delta",
    "z_of_x",
    "z_of_s",
    "ds_dz",
    "drift_F",
    "drift_eval",
    "rate_beta",
    "rate_indices",
    "rates_and_directions",
    "drift_from_rates",
    "diffusion_matrix",
    "jacobian_dF",
    "limiting_eigensystem",
    "truncated_poisson_pmf",
    "trajectory",
]

_E = math.e


def lambert_w(t: float) -> float:
    """Principal Lambert W on t >= 0: the solution of W e^W = t.

    Halley iteration from a logarithmic initial guess; the residual
    |W e^W - t| ends below 1e-14 * max(1, t).
    """
    if t < 0:
        raise ValueError("only the nonnegative principal branch is supported")
    if t == 0.0:
        return 0.0
    w = math.log1p(t)
    if w == 0.0:
        return t  # underflow-tiny t: W(t) = t to machine precision
    for _ in range(64):
        e = math.exp(w)
        f = w * e - t
        # Halley step
        denom = e * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def f_exp(z: float) -> float:
    """e^z - z - 1, by series below z = 1e-2 (direct subtraction there loses
    enough relative precision to spoil 1e-9 round trips through z_of_x)."""
    if abs(z) < 1e-2:
        return z * z * (
            0.5
            + z * (1.0 / 6 + z * (1.0 / 24 + z * (1.0 / 120 + z * (1.0 / 720 + z / 5040))))
        )
    return math.expm1(z) - z


def _one_minus_one_plus_z_emz(z: float) -> float:
    """1 - (1+z) e^-z, by series below z = 1e-2 (same rationale as f_exp)."""
    if abs(z) < 1e-2:
        return z * z * (
            0.5
            + z * (-1.0 / 3 + z * (0.125 + z * (-1.0 / 30 + z * (1.0 / 144 - z / 840))))
        )
    return 1.0 - (1.0 + z) * math.exp(-z)


def _g(z: float) -> float:
    """g(z) = z (e^z - 1) / (e^z - z - 1), the link between the truncated
    Poisson parameter and the statistics ratio (2x3 - x1)/x2; g(0+) = 2."""
    if abs(z) < 1e-3:
        return 2.0 + z * (1.0 / 3 + z * (1.0 / 18 + z * (1.0 / 270 - z / 3240)))
    return z * math.expm1(z) / f_exp(z)


def _g_prime(z: float) -> float:
    if abs(z) < 1e-2:
        return 1.0 / 3 + z * (1.0 / 9 + z * (1.0 / 90 - z / 810))
    em1 = math.expm1(z)
    f = f_exp(z)
    return (em1 + z * math.exp(z)) / f - z * em1 * em1 / (f * f)


@dataclass(frozen=True)
class FluidPoint:
    """One point of the fluid trajectory, indexed by z."""

    c: float
    z: float
    chi: np.ndarray  # (chi1, chi2, chi3, chi4)

    @property
    def s(self) -> float:
        return float(self.chi[3])


def _check_c(c: float) -> None:
    if not (0.0 < c <= _E + 1e-12):
        raise ValueError("the z-parameterisation needs 0 < c <= e")


def chi_of_z(z: float, c: float) -> FluidPoint:
    """Evaluate the fluid trajectory at parameter z (z = c is the start of
    the process, z = 0 its end)."""
    _check_c(c)
    if z < -1e-12 or z > c * (1.0 + 1e-12):
        raise ValueError("z must lie in [0, c]")
    z = min(max(z, 0.0), c)
    omega = lambert_w(c * math.exp(z))  # = c * beta(z)
    chi1 = (z * z - z * omega * (-math.expm1(-z))) / c
    chi2 = _one_minus_one_plus_z_emz(z) * (omega / c)
    chi3 = z * z / (2.0 * c)
    # log(beta(z)) = z - omega, from W e^W = c e^z
    chi4 = (c - omega - 0.5 * (z - omega) ** 2) / c
    return FluidPoint(c=c, z=z, chi=np.array([chi1, chi2, chi3, chi4]))


def s_star(c: float) -> float:
    """Total rescaled duration of the process: chi4 at z = 0."""
    _check_c(c)
    w = lambert_w(c)
    return (2.0 * c - 2.0 * w - w * w) / (2.0 * c)


def z_delta(c: float, delta: float) -> float:
    """The z at which the edge fraction chi3 equals delta: sqrt(2 c delta)."""
    _check_c(c)
    if not (0.0 < delta < c / 2.0):
        raise ValueError("need 0 < delta < c/2 (the process starts with c/2 edges per vertex)")
    return math.sqrt(2.0 * c * delta)


def s_delta(c: float, delta: float) -> float:
    """Fluid-limit prediction of the stopped time: chi4 where chi3 = delta."""
    return chi_of_z(z_delta(c, delta), c).s


def ds_dz(z: float, c: float) -> float:
    """d(chi4)/dz = -z / (c (1 + W(c e^z))); negative since s runs against z."""
    omega = lambert_w(c * math.exp(z))
    return -z / (c * (1.0 + omega))


def z_of_x(x, *, rtol: float = 1e-12) -> float:
    """The unique z >= 0 with z (e^z - 1)/(e^z - z - 1) = (2 x3 - x1) / x2.

    Requires x2 > 0 and ratio >= 2 (the ratio is 2 exactly when every
    degree-2-or-more vertex has degree exactly 2, which forces z = 0).
    """
    x = np.asarray(x, dtype=float)
    if x[1] <= 0:
        raise ValueError("z is undefined when x2 <= 0")
    ratio = (2.0 * x[2] - x[0]) / x[1]
    if ratio < 2.0 - 1e-9:
        raise ValueError(f"degenerate statistics: (2 x3 - x1)/x2 = {ratio} < 2")
    ratio = max(ratio, 2.0)
    if ratio == 2.0:
        return 0.0
    if ratio - 2.0 < 1e-4:
        z = 3.0 * (ratio - 2.0)  # series inverse; polished by Newton below
    else:
        lo, hi = 0.0, ratio  # g(z) > z for z > 0, so g(ratio) > ratio
        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            if _g(mid) < ratio:
                lo = mid
            else:
                hi = mid
        z = 0.5 * (lo + hi)
    for _ in range(60):
        step = (_g(z) - ratio) / _g_prime(z)
        z -= step
        if abs(step) <= rtol * max(z, 1e-6):
            break
    return max(z, 0.0)


def z_of_s(c: float, s: float) -> float:
    """Invert chi4: the z at which the trajectory reaches time s."""
    _check_c(c)
    smax = s_star(c)
    if s < -1e-12 or s > smax + 1e-12:
        raise ValueError(f"s must lie in [0, s*] = [0, {smax}]")
    s = min(max(s, 0.0), smax)
    lo, hi = 0.0, c  # chi4 decreases in z
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if chi_of_z(mid, c).s > s:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    for _ in range(60):
        d = ds_dz(z, c)
        if d == 0.0:
            break
        step = (chi_of_z(z, c).s - s) / d
        z -= step
        z = min(max(z, 0.0), c)
        if abs(step) <= 1e-13 * max(z, 1.0):
            break
    return z


def _abz(x, z: float | None) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float)
    if z is None:
        z = z_of_x(x)
    t = 2.0 * x[2]
    return x[0] / t, x[1] / t, z


def drift_F(x, *, z: float | None = None) -> np.ndarray:
    """Drift of the rescaled statistics: the expected jump per step.

    F4 = 1 identically (one step per unit of rescaled time); F3 <= -1
    (every step kills at least one edge).  ``z`` may be supplied when it is
    already known (e.g. on the fluid trajectory).
    """
    a, b, z = _abz(x, z)
    f = f_exp(z)
    ez = math.exp(z)
    phi = z * z * ez / f
    psi = z ** 4 * ez / (f * f)
    f1 = -1.0 - a + b * b * psi - a * b * phi
    f2 = -1.0 + a - b * b * psi
    f3 = -1.0 - b * phi
    return np.array([f1, f2, f3, 1.0])


@dataclass(frozen=True)
class RateIndex:
    """Neighbourhood profile of the removed neighbour w: k1 >= 1 degree-1
    neighbours (the chosen leaf among them), k2 of degree 2, k3 of degree
    >= 3.  Profiles with k1 + k2 + k3 >= 2 carry the displayed product
    rate; the profile (1, 0, 0) is the isolated-edge event with direction
    (-2, 0, -1, 1) and rate x1 / (2 x3)."""

    k1: int
    k2: int
    k3: int

    def __post_init__(self) -> None:
        if self.k1 < 1 or self.k2 < 0 or self.k3 < 0:
            raise ValueError("need k1 >= 1 and k2, k3 >= 0")

    @property
    def is_isolated_edge(self) -> bool:
        return self.k1 + self.k2 + self.k3 == 1

    @property
    def direction(self) -> np.ndarray:
        """The jump l of (X1, X2, X3, X4) this profile causes."""
        if self.is_isolated_edge:
            return np.array([-2, 0, -1, 1], dtype=float)
        return np.array(
            [-self.k1 + self.k2, -1 - self.k2, -(self.k1 + self.k2 + self.k3), 1],
            dtype=float,
        )


ISOLATED_EDGE = RateIndex(1, 0, 0)


def rate_beta(k: RateIndex, x, *, z: float | None = None) -> float:
    """Jump rate beta_l(x) for the profile k."""
    a, b, z = _abz(x, z)
    if k.is_isolated_edge:
        return a
    if z <= 0.0:
        raise ValueError("rates for compound profiles need z > 0")
    f = f_exp(z)
    base = b * z / f
    return (
        base
        / (math.factorial(k.k1 - 1) * math.factorial(k.k2) * math.factorial(k.k3))
        * (a * z) ** (k.k1 - 1)
        * (b * z ** 3 / f) ** k.k2
        * (b * z * z) ** k.k3
    )


@lru_cache(maxsize=8)
def _rate_table(kcap: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All profiles with 2 <= k1+k2+k3 <= kcap, preceded by the isolated-edge
    profile; returns (K, L, log prefactors)."""
    rows = [(1, 0, 0)]
    for total in range(2, kcap + 1):
        for k1 in range(1, total + 1):
            for k2 in range(0, total - k1 + 1):
                rows.append((k1, k2, total - k1 - k2))
    K = np.array(rows, dtype=np.int64)
    L = np.stack(
        [
            np.where(K.sum(axis=1) == 1, -2, -K[:, 0] + K[:, 1]),
            np.where(K.sum(axis=1) == 1, 0, -1 - K[:, 1]),
            np.where(K.sum(axis=1) == 1, -1, -K.sum(axis=1)),
            np.ones(len(rows), dtype=np.int64),
        ],
        axis=1,
    ).astype(float)
    logfact = (
        _log_factorial(K[:, 0] - 1) + _log_factorial(K[:, 1]) + _log_factorial(K[:, 2])
    )
    return K, L, logfact


def _log_factorial(k: np.ndarray) -> np.ndarray:
    return np.array([math.lgamma(int(v) + 1.0) for v in k])


def rate_indices(kcap: int) -> list[RateIndex]:
    """The isolated-edge profile plus every compound profile up to kcap."""
    K, _, _ = _rate_table(kcap)
    return [RateIndex(*map(int, row)) for row in K]


def rates_and_directions(
    x, kcap: int = 30, *, z: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Vector of rates beta_l(x) (isolated-edge profile first) and the
    matching (N, 4) array of jump directions, truncated at k1+k2+k3 <= kcap."""
    if kcap < 2:
        raise ValueError("kcap must be at least 2")
    a, b, z = _abz(x, z)
    if z <= 0.0:
        raise ValueError("rates need z > 0")
    K, L, logfact = _rate_table(kcap)
    f = f_exp(z)
    with np.errstate(divide="ignore"):
        log_terms = (
            math.log(b * z / f)
            - logfact
            + (K[:, 0] - 1) * (np.log(a * z) if a > 0 else -np.inf)
            + K[:, 1] * math.log(b * z ** 3 / f)
            + K[:, 2] * math.log(b * z * z)
        )
    betas = np.exp(log_terms)
    if a == 0.0:
        betas[K[:, 0] > 1] = 0.0
    betas[0] = a  # the isolated-edge event
    return betas, L


def drift_from_rates(x, kcap: int = 30, *, z: float | None = None) -> np.ndarray:
    """sum_l beta_l(x) l, the rate-sum form of the drift (agrees with
    drift_F up to the kcap truncation tail)."""
    betas, L = rates_and_directions(x, kcap, z=z)
    return betas @ L


def diffusion_matrix(x, kcap: int = 30, *, z: float | None = None) -> np.ndarray:
    """sum_l beta_l(x) l l^T, the per-step jump second moment (symmetric
    positive semidefinite)."""
    betas, L = rates_and_directions(x, kcap, z=z)
    m = (L * betas[:, None]).T @ L
    return 0.5 * (m + m.T)


def jacobian_dF(x, *, z: float | None = None) -> np.ndarray:
    """Analytic Jacobian (dF_i/dx_j); z(x) is differentiated implicitly
    through its defining equation.  Row 4 and column 4 vanish."""
    x = np.asarray(x, dtype=float)
    a, b, z = _abz(x, z)
    t = 2.0 * x[2]
    f = f_exp(z)
    ez = math.exp(z)
    phi = z * z * ez / f
    psi = z ** 4 * ez / (f * f)
    # phi' = phi * h1, psi' = psi * h2; series kill the 1/z cancellation
    if z < 1e-2:
        h1 = 2.0 / 3 + z * (-1.0 / 18 + z * (-1.0 / 270 + z / 3240))
        h2 = 1.0 / 3 + z * (-1.0 / 9 + z * (-1.0 / 135 + z / 1620))
    else:
        ratio = math.expm1(z) / f
        h1 = 2.0 / z + 1.0 - ratio
        h2 = 4.0 / z + 1.0 - 2.0 * ratio
    dphi = phi * h1
    dpsi = psi * h2

    gp = _g_prime(z)
    ratio_x = (2.0 * x[2] - x[0]) / x[1]
    dz = np.array([-1.0 / x[1], -ratio_x / x[1], 2.0 / x[1]]) / gp

    da = np.array([1.0 / t, 0.0, -2.0 * a / t])
    db = np.array([0.0, 1.0 / t, -2.0 * b / t])

    jac = np.zeros((4, 4))
    for j in range(3):
        dF1 = (
            -da[j]
            + 2.0 * b * db[j] * psi
            + b * b * dpsi * dz[j]
            - (da[j] * b + a * db[j]) * phi
            - a * b * dphi * dz[j]
        )
        dF2 = da[j] - 2.0 * b * db[j] * psi - b * b * dpsi * dz[j]
        dF3 = -db[j] * phi - b * dphi * dz[j]
        jac[0, j] = dF1
        jac[1, j] = dF2
        jac[2, j] = dF3
    return jac


@dataclass(frozen=True)
class DriftEval:
    """Drift and (optionally) its Jacobian at one statistics vector."""

    F: np.ndarray
    jacobian: np.ndarray | None
    at: np.ndarray


def drift_eval(x, *, jacobian: bool = True, z: float | None = None) -> DriftEval:
    x = np.asarray(x, dtype=float)
    if z is None:
        z = z_of_x(x)
    return DriftEval(
        F=drift_F(x, z=z),
        jacobian=jacobian_dF(x, z=z) if jacobian else None,
        at=x,
    )


@dataclass(frozen=True)
class EigenLimit:
    """Limit of z^2 * dF-hat(chi) as z -> 0: eigenvalues c(1+W)(0, -3, -2)
    with eigenvector matrix Q; the kernel direction v0 = Q e1 is where
    late-process fluctuations concentrate."""

    D: np.ndarray
    Q: np.ndarray
    v0: np.ndarray


def limiting_eigensystem(c: float) -> EigenLimit:
    _check_c(c)
    w = lambert_w(c)
    scale = c * (1.0 + w)
    D = scale * np.diag([0.0, -3.0, -2.0])
    Q = np.array(
        [
            [2.0 - 2.0 * w, 0.5 * (w - 1.0) * (3.0 * w - 1.0), -4.0 * w],
            [w, 0.5 * (-2.0 * w - 1.0) * (w - 1.0), 2.0 * w + 1.0],
            [1.0, 1.0, 1.0],
        ]
    )
    v0 = np.array([2.0 - 2.0 * w, w, 1.0])
    return EigenLimit(D=D, Q=Q, v0=v0)


def truncated_poisson_pmf(z: float, dmax: int) -> np.ndarray:
    """Pr[Q = d | Q >= 2] for Q ~ Poisson(z), as an array indexed by
    d = 0..dmax (entries 0 and 1 are zero): z^d / (d! (e^z - z - 1)).

    The z -> 0 limit is a point mass at d = 2.
    """
    if z < 0:
        raise ValueError("z must be nonnegative")
    p = np.zeros(dmax + 1)
    if dmax < 2:
        return p
    if z == 0.0:
        p[2] = 1.0
        return p
    f = f_exp(z)
    logz = math.log(z)
    for d in range(2, dmax + 1):
        p[d] = math.exp(d * logz - math.lgamma(d + 1.0)) / f
    return p


def trajectory(
    c: float, num: int = 512, z_min: float = 0.0, z_max: float | None = None
) -> dict[str, np.ndarray]:
    """Tabulate the trajectory on a z grid from the start of the process
    down to z_min: arrays z, s, chi (num, 4) and F (num, 4) (the drift is
    skipped on the z = 0 boundary where it is singular)."""
    _check_c(c)
    if z_max is None:
        z_max = c
    zs = np.linspace(z_max, z_min, num)
    chi = np.empty((num, 4))
    F = np.full((num, 4), np.nan)
    for i, z in enumerate(zs):
        pt = chi_of_z(z, c)
        chi[i] = pt.chi
        if z > 1e-9:
            F[i] = drift_F(pt.chi, z=z)
    return {"z": zs, "s": chi[:, 3], "chi": chi, "F": F}

"""Gaussian fluctuation machinery along the fluid trajectory.

The rescaled fluctuations V(s) = (X(ns) - n chi(s)) / sqrt(n) converge to a
Gaussian process whose covariance Sigma(s) solves the Lyapunov equation

    dSigma/ds = dF(chi(s)) Sigma + Sigma dF(chi(s))^T + M(chi(s)),

where M = sum_l beta_l l l^T is the jump second moment and Sigma(0) is the
model-dependent initial covariance.  Stopping at the first time the edge
count falls to delta*n replaces Sigma(s_delta) by

    Sigma_delta = P_delta Sigma(s_delta) P_delta^T,
    P_delta     = I - F(chi(s_delta)) e3^T / F3(chi(s_delta)),

which projects out the fluctuation of the stopping time itself.  The
variance of the matching number (and of half the adjacency rank) is
asymptotically n times the delta -> 0 limit of (Sigma_delta)_{4,4}.

Integration runs in tau = log z: the Jacobian grows like 1/z^2 while
ds/dz ~ -z/c(1+W), so in tau the right-hand side stays O(1) all the way to
the stop and fixed-grid RK4 with step doubling converges fast.  The
correlation function Phi(s, u) (flow map of the linearized dynamics)
integrates the same way; it stays available for quadrature cross-checks of
the Lyapunov propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fluid import (
    chi_of_z,
    diffusion_matrix,
    drift_F,
    jacobian_dF,
    lambert_w,
    s_delta,
    s_star,
    z_delta,
    z_of_s,
)

__all__ = [
    "InitialCovariance",
    "CovarianceState",
    "SigmaLadder",
    "LowRankReport",
    "initial_covariance",
    "propagate_covariance",
    "correlation_phi",
    "stop_projector",
    "stopped_covariance",
    "limiting_sigma44",
    "low_rank_check",
]

_FIXED_ALIASES = {"fixed-edges", "fixed", "gnm", "multigraph-fixed"}
_BINOMIAL_ALIASES = {"binomial-edges", "binomial", "gnp", "multigraph-binomial"}


def canonical_model(model: str) -> str:
    if model in _FIXED_ALIASES:
        return "fixed-edges"
    if model in _BINOMIAL_ALIASES:
        return "binomial-edges"
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class InitialCovariance:
    """Limiting covariance of (X(0) - n chi(0)) / sqrt(n) for one model."""

    model: str
    sigma: np.ndarray


def initial_covariance(model: str, c: float) -> InitialCovariance:
    """Closed-form initial covariance.

    'fixed-edges' is the multigraph with exactly floor(cn/2) edges (the edge
    count does not fluctuate: rows and columns 3 and 4 vanish);
    'binomial-edges' draws the edge count binomially and has a nonzero
    3x3 block with entry (3,3) = c/2.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    model = canonical_model(model)
    e1 = math.exp(-c)
    e2 = math.exp(-2.0 * c)
    sigma = np.zeros((4, 4))
    if model == "fixed-edges":
        sigma[0, 0] = c * c * e2 + c * e1 - c * e2 - c ** 3 * e2
        sigma[0, 1] = sigma[1, 0] = -c * e1 + c * e2 + c ** 3 * e2
        sigma[1, 1] = (e1 + c * e1) * (1.0 - e1 - c * e1) - c ** 3 * e2
    else:
        sigma[0, 0] = (c ** 3 - 3.0 * c * c + c) * e2 + c * e1
        sigma[0, 1] = sigma[1, 0] = (-(c ** 3) + 2.0 * c * c + c) * e2 - c * e1
        sigma[0, 2] = sigma[2, 0] = (c - c * c) * e1
        sigma[1, 1] = (c ** 3 - c * c - 2.0 * c - 1.0) * e2 + (c + 1.0) * e1
        sigma[1, 2] = sigma[2, 1] = c * c * e1
        sigma[2, 2] = c / 2.0
    return InitialCovariance(model=model, sigma=sigma)


def _sigma_rhs_factory(c: float, kcap: int, freeze: bool):
    def rhs(tau: float, sigma: np.ndarray) -> np.ndarray:
        if freeze:
            return np.zeros((4, 4))
        z = math.exp(tau)
        x = chi_of_z(z, c).chi
        jac = jacobian_dF(x, z=z)
        mom = diffusion_matrix(x, kcap, z=z)
        omega = lambert_w(c * math.exp(z))
        dsdtau = -z * z / (c * (1.0 + omega))  # = z * ds/dz
        out = dsdtau * (jac @ sigma + sigma @ jac.T + mom)
        return out

    return rhs


def _phi_rhs_factory(c: float):
    def rhs(tau: float, phi: np.ndarray) -> np.ndarray:
        z = math.exp(tau)
        x = chi_of_z(z, c).chi
        jac = jacobian_dF(x, z=z)[:3, :3]
        omega = lambert_w(c * math.exp(z))
        dsdtau = -z * z / (c * (1.0 + omega))
        return dsdtau * (jac @ phi)

    return rhs


def _rk4(rhs, nodes: np.ndarray, y0: np.ndarray, collect_at: dict[float, None]) -> dict:
    """Classic RK4 along the given nodes; records y at requested tau marks."""
    y = y0.copy()
    collected = {}
    if nodes[0] in collect_at:
        collected[nodes[0]] = y.copy()
    for a, b in zip(nodes, nodes[1:]):
        h = b - a
        k1 = rhs(a, y)
        k2 = rhs(a + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(a + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(b, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if b in collect_at:
            collected[b] = y.copy()
    collected["final"] = y
    return collected


def _integrate(rhs, z_start, z_stop, y0, *, tol, z_marks=(), min_steps=96):
    """Step-doubled RK4 in tau = log z until successive grids agree to tol."""
    span = abs(math.log(z_start) - math.log(z_stop))
    steps = max(min_steps, int(32 * span))
    marks = {math.log(z): None for z in z_marks}
    prev = None
    for _ in range(8):
        nodes = _tau_grid_from(z_start, z_stop, steps, z_marks)
        res = _rk4(rhs, nodes, y0, marks)
        if prev is not None and np.abs(res["final"] - prev).max() < tol:
            return res
        prev = res["final"]
        steps *= 2
    raise RuntimeError(
        "covariance integration did not reach the requested tolerance "
        f"(tol={tol}, steps={steps}); the step size underflowed its budget"
    )


def _tau_grid_from(z_start: float, z_stop: float, steps: int,
                   z_marks: tuple[float, ...]) -> np.ndarray:
    marks = sorted({math.log(z_start), math.log(z_stop),
                    *(math.log(z) for z in z_marks)}, reverse=True)
    total = marks[0] - marks[-1]
    nodes = [marks[0]]
    for a, b in zip(marks, marks[1:]):
        k = max(1, int(round(steps * (a - b) / total)))
        nodes.extend(a + (b - a) * (i + 1) / k for i in range(k - 1))
        nodes.append(b)  # exactly, so collected marks hash-match
    return np.array(nodes)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def propagate_covariance(
    c: float,
    delta: float,
    sigma0,
    *,
    kcap: int = 30,
    tol: float = 1e-9,
    freeze_dynamics: bool = False,
) -> np.ndarray:
    """Sigma(s_delta): the Lyapunov equation integrated from the start of
    the process to the stop where the edge fraction reaches delta.

    ``freeze_dynamics`` is a test hook forcing dF = 0 and M = 0, which must
    return sigma0 unchanged.
    """
    if isinstance(sigma0, InitialCovariance):
        sigma0 = sigma0.sigma
    sigma0 = np.asarray(sigma0, dtype=float)
    zd = z_delta(c, delta)
    rhs = _sigma_rhs_factory(c, kcap, freeze_dynamics)
    res = _integrate(rhs, c, zd, sigma0, tol=tol)
    return _symmetrize(res["final"])


def correlation_phi(c: float, u: float, s: float, *, tol: float = 1e-9) -> np.ndarray:
    """The flow map Phi(s, u) of the linearized dynamics, as a 4x4 matrix.

    Phi(u, u) is the identity exactly; the fourth row and column stay
    (0, 0, 0, 1) because the step counter neither feeds back nor reacts.
    """
    smax = s_star(c)
    if not (0.0 <= u <= s <= smax):
        raise ValueError("need 0 <= u <= s <= s*")
    if s >= smax:
        raise ValueError("s must be strictly below s* (z = 0 is singular)")
    out = np.eye(4)
    if s == u:
        return out
    zu = z_of_s(c, u)
    zs = z_of_s(c, s)
    res = _integrate(_phi_rhs_factory(c), zu, zs, np.eye(3), tol=tol)
    out[:3, :3] = res["final"]
    return out


def stop_projector(c: float, delta: float) -> np.ndarray:
    """P_delta = I - F e3^T / F3 at the stop: subtracts the part of the
    fluctuation explained by the stopping-time fluctuation.  Row 3 vanishes
    and P_delta is idempotent."""
    zd = z_delta(c, delta)
    F = drift_F(chi_of_z(zd, c).chi, z=zd)
    p = np.eye(4)
    p[:, 2] -= F / F[2]
    return p


@dataclass
class CovarianceState:
    """Covariance at the stop, before and after the stopping projection."""

    c: float
    delta: float
    sigma_at_stop: np.ndarray
    projector: np.ndarray
    sigma_delta: np.ndarray


def stopped_covariance(c: float, delta: float, sigma_at_stop: np.ndarray) -> CovarianceState:
    """Apply the stopping projection: Sigma_delta = P Sigma(s_delta) P^T.

    P_delta does not depend on the integration variable, so it factors out
    of the covariance integral; row and column 3 of the result are zeroed
    exactly (the edge count is pinned at the stop)."""
    p = stop_projector(c, delta)
    sd = _symmetrize(p @ np.asarray(sigma_at_stop, float) @ p.T)
    sd[2, :] = 0.0
    sd[:, 2] = 0.0
    return CovarianceState(
        c=c, delta=delta,
        sigma_at_stop=np.asarray(sigma_at_stop, float),
        projector=p, sigma_delta=sd,
    )


@dataclass
class SigmaLadder:
    """(Sigma_delta) diagonals on a decreasing delta ladder and the
    extrapolated (4,4) limit."""

    c: float
    model: str
    deltas: np.ndarray
    diag: np.ndarray  # (levels, 4): diagonal of Sigma_delta per ladder level
    sigma44_limit: float
    warnings: list[str] = field(default_factory=list)

    @property
    def sigma44(self) -> np.ndarray:
        return self.diag[:, 3]


def limiting_sigma44(
    c: float,
    model: str,
    *,
    delta0: float = 0.05,
    levels: int = 7,
    kcap: int = 30,
    tol: float = 1e-9,
) -> SigmaLadder:
    """(Sigma_delta)_{4,4} on the ladder delta_k = delta0 * 2^-k and its
    delta -> 0 extrapolation assuming a sqrt(delta) correction.

    One integration pass serves the whole ladder: Sigma(s) is captured at
    every ladder stop on the way down.  The first three diagonal entries
    decay like sqrt(delta); the (4,4) entry's correction rate is not pinned
    by theory, so the raw ladder ships alongside the extrapolation and a
    non-converging tail raises a warning instead of trusting the fit.
    """
    deltas = np.array([delta0 * 2.0 ** (-k) for k in range(levels)])
    z_marks = tuple(z_delta(c, d) for d in deltas)
    sigma0 = initial_covariance(model, c).sigma
    rhs = _sigma_rhs_factory(c, kcap, freeze=False)
    res = _integrate(rhs, c, min(z_marks), sigma0, tol=tol, z_marks=z_marks)

    diag = np.empty((levels, 4))
    for k, (d, zm) in enumerate(zip(deltas, z_marks)):
        sigma_s = res[math.log(zm)]
        diag[k] = np.diag(stopped_covariance(c, d, sigma_s).sigma_delta)

    # least-squares fit v = L + K sqrt(delta) on the tail of the ladder
    tail = min(4, levels)
    a = np.stack([np.ones(tail), np.sqrt(deltas[-tail:])], axis=1)
    coef, *_ = np.linalg.lstsq(a, diag[-tail:, 3], rcond=None)
    limit = float(coef[0])

    warnings: list[str] = []
    v = diag[:, 3]
    if levels >= 3:
        increments = np.abs(np.diff(v))
        if increments[-1] > increments[0] + tol:
            warnings.append(
                "sigma44 ladder increments are not shrinking; extrapolation is unreliable"
            )
    if limit <= 0:
        warnings.append("extrapolated sigma44 is not positive")
    return SigmaLadder(
        c=c, model=canonical_model(model), deltas=deltas, diag=diag,
        sigma44_limit=limit, warnings=warnings,
    )


@dataclass
class LowRankReport:
    """Angles between the columns of Phi-hat(s_delta, u) and the late-time
    drift direction v0, on a (u, delta) grid, with fitted decay exponents."""

    c: float
    u_grid: np.ndarray
    delta_grid: np.ndarray
    ratios: np.ndarray  # (len(u), len(delta)): (s* - s_delta) / (s* - u)
    max_angles: np.ndarray  # (len(u), len(delta)): worst column angle, radians
    exponents: np.ndarray  # fitted decay exponent of angle vs ratio, per u


def low_rank_check(
    c: float,
    u_grid,
    delta_grid,
    *,
    tol: float = 1e-9,
) -> LowRankReport:
    """Quantify the late-process rank collapse of the flow map: every
    column of Phi-hat(s_delta, u) aligns with v0 as delta -> 0, with angle
    on the order of ((s* - s_delta)/(s* - u))^(1/4)."""
    from .fluid import limiting_eigensystem

    u_grid = np.asarray(u_grid, float)
    delta_grid = np.asarray(delta_grid, float)
    smax = s_star(c)
    v0 = limiting_eigensystem(c).v0
    v0n = v0 / np.linalg.norm(v0)

    ratios = np.full((u_grid.size, delta_grid.size), np.nan)
    angles = np.full((u_grid.size, delta_grid.size), np.nan)
    for i, u in enumerate(u_grid):
        for j, d in enumerate(delta_grid):
            sd = s_delta(c, d)
            if sd <= u:
                continue
            phi = correlation_phi(c, u, sd, tol=tol)[:3, :3]
            worst = 0.0
            for col in range(3):
                g = phi[:, col]
                ng = np.linalg.norm(g)
                if ng == 0.0:
                    continue
                cosang = min(1.0, abs(float(g @ v0n)) / ng)
                worst = max(worst, math.acos(cosang))
            ratios[i, j] = (smax - sd) / (smax - u)
            angles[i, j] = worst

    exponents = np.full(u_grid.size, np.nan)
    for i in range(u_grid.size):
        mask = np.isfinite(ratios[i]) & (angles[i] > 1e-12)
        if mask.sum() >= 2:
            slope, _ = np.polyfit(np.log(ratios[i, mask]), np.log(angles[i, mask]), 1)
            exponents[i] = slope
    return LowRankReport(
        c=c, u_grid=u_grid, delta_grid=delta_grid,
        ratios=ratios, max_angles=angles, exponents=exponents,
    )

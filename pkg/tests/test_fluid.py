import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kslab import fluid
from kslab.fluid import (
    ISOLATED_EDGE,
    RateIndex,
    chi_of_z,
    diffusion_matrix,
    drift_F,
    drift_from_rates,
    jacobian_dF,
    lambert_w,
    limiting_eigensystem,
    rate_beta,
    rates_and_directions,
    s_delta,
    s_star,
    trajectory,
    truncated_poisson_pmf,
    z_delta,
    z_of_s,
    z_of_x,
)


def _bisect_lambert(t: float) -> float:
    lo, hi = 0.0, max(1.0, t)
    while hi * math.exp(hi) < t:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_lambert_w_reference_points():
    assert lambert_w(0.0) == 0.0
    assert abs(lambert_w(math.e) - 1.0) < 1e-15
    assert abs(lambert_w(1.0) - _bisect_lambert(1.0)) < 1e-12
    with pytest.raises(ValueError):
        lambert_w(-0.1)


@given(st.floats(0.0, 1e6))
@settings(max_examples=200, deadline=None)
def test_lambert_w_residual(t):
    w = lambert_w(t)
    assert abs(w * math.exp(w) - t) <= 1e-14 * max(1.0, t)


def test_chi_at_start_matches_poisson_fractions():
    for c in (1.0, 2.0, math.e):
        pt = chi_of_z(c, c)
        expect = np.array([
            c * math.exp(-c),
            1.0 - (1.0 + c) * math.exp(-c),
            c / 2.0,
            0.0,
        ])
        assert np.abs(pt.chi - expect).max() < 1e-14


def test_chi_at_end_is_s_star():
    for c in (1.0, 2.0, math.e):
        pt = chi_of_z(0.0, c)
        assert np.abs(pt.chi[:3]).max() < 1e-14
        assert abs(pt.s - s_star(c)) < 1e-12


def test_chi3_identity_exact():
    for z in (0.0, 0.3, 1.0, 1.9):
        assert chi_of_z(z, 2.0).chi[2] == z * z / 4.0


def test_s_star_values():
    assert abs(s_star(math.e) - (2 * math.e - 3) / (2 * math.e)) < 1e-15
    c = 1e-4  # s* ~ c/2 for small c
    assert abs(s_star(c) - c / 2) < 1e-7
    with pytest.raises(ValueError):
        s_star(3.0)


def test_z_delta_and_s_delta():
    c = 2.0
    eps = 1e-9
    assert abs(z_delta(c, c / 2 - eps) - c) < 1e-4
    assert s_delta(c, c / 2 - eps) < 1e-8
    assert abs(s_star(c) - s_delta(c, 1e-8)) < 1e-7
    assert z_delta(c, 0.05) == math.sqrt(0.2)
    with pytest.raises(ValueError):
        z_delta(c, c / 2)
    with pytest.raises(ValueError):
        z_delta(c, 0.0)


def test_s_delta_gap_is_order_delta():
    # slope oracle: (s* - s) / chi3 on a dense small-z grid bounds the ratio
    c = 2.0
    smax = s_star(c)
    ratios = []
    for z in np.geomspace(1e-3, 0.5, 50):
        pt = chi_of_z(z, c)
        ratios.append((smax - pt.s) / pt.chi[2])
    k_max = max(ratios)
    for delta in (0.05, 0.01, 0.001):
        gap = smax - s_delta(c, delta)
        assert 0.0 < gap < 1.05 * k_max * delta


def test_z_of_x_round_trips_spec_points():
    for z in (0.1, 0.5, 1.0):
        x = chi_of_z(z, 2.0).chi
        assert abs(z_of_x(x) - z) < 1e-9


@given(st.floats(1e-3, math.e), st.floats(0.2, math.e))
@settings(max_examples=150, deadline=None)
def test_z_of_x_round_trips(z, c):
    if z > c:
        z = c
    x = chi_of_z(z, c).chi
    assert abs(z_of_x(x) - z) <= 1e-9 * max(1.0, z)


def test_z_of_x_boundary_and_forward_point():
    assert z_of_x([0.0, 1.0, 1.0, 0.0]) == 0.0  # ratio exactly 2
    g1 = 1.0 * math.expm1(1.0) / (math.e - 2.0)  # g(1)
    x = np.array([0.0, 1.0, g1 / 2.0, 0.0])
    assert abs(z_of_x(x) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        z_of_x([1.0, 1.0, 1.0, 0.0])  # ratio = 1 < 2
    with pytest.raises(ValueError):
        z_of_x([0.0, 0.0, 1.0, 0.0])  # x2 = 0


def test_z_of_s_inverts_chi4():
    c = 2.0
    for s in (0.0, 0.1, 0.25, 0.35, s_star(c)):
        z = z_of_s(c, s)
        assert abs(chi_of_z(z, c).s - s) < 1e-10
    with pytest.raises(ValueError):
        z_of_s(c, s_star(c) + 1e-3)


def test_drift_f4_is_one_and_f3_below_minus_one():
    gen = np.random.default_rng(0)
    for _ in range(1000):
        z = 10 ** gen.uniform(-2, math.log10(2.0))
        x = chi_of_z(z, 2.0).chi
        F = drift_F(x, z=z)
        assert F[3] == 1.0
        assert F[2] <= -1.0
    # off-trajectory points too
    for _ in range(100):
        x = np.array([gen.uniform(0, 1), gen.uniform(0.05, 1),
                      gen.uniform(0.5, 2), 0.0])
        if (2 * x[2] - x[0]) / x[1] < 2.05:
            continue
        F = drift_F(x)
        assert F[3] == 1.0 and F[2] <= -1.0


def test_drift_limit_near_process_end():
    c = 2.0
    w = lambert_w(c)
    limit = -(1.0 + w) * np.array([2.0 - 2.0 * w, w, 1.0])
    errs = []
    for z in (0.2, 0.1, 0.05):
        F = drift_F(chi_of_z(z, c).chi, z=z)
        errs.append(np.abs(F[:3] - limit).max())
    assert errs[0] < 0.5 and errs[-1] < errs[0]  # O(z) approach
    assert errs[-1] / 0.05 < 2.5 * errs[0] / 0.2


def test_rate_index_validation_and_special_case():
    with pytest.raises(ValueError):
        RateIndex(0, 1, 1)
    with pytest.raises(ValueError):
        RateIndex(1, -1, 0)
    assert ISOLATED_EDGE.is_isolated_edge
    assert ISOLATED_EDGE.direction.tolist() == [-2, 0, -1, 1]
    x = np.array([0.3, 0.5, 0.8, 0.0])
    assert rate_beta(ISOLATED_EDGE, x) == x[0] / (2 * x[2])
    k = RateIndex(1, 1, 1)
    assert k.direction.tolist() == [0, -2, -3, 1]


def test_drift_equals_rate_sum():
    for z in np.linspace(0.05, 1.95, 20):
        x = chi_of_z(z, 2.0).chi
        closed = drift_F(x, z=z)
        summed = drift_from_rates(x, kcap=60, z=z)
        assert np.abs(closed - summed).max() < 1e-8
        betas, _ = rates_and_directions(x, kcap=60, z=z)
        assert abs(betas.sum() - 1.0) < 1e-12  # rates are step probabilities


def test_diffusion_matrix_properties():
    worst_trace = 0.0
    for z in np.linspace(0.05, 1.95, 20):
        x = chi_of_z(z, 2.0).chi
        m = diffusion_matrix(x, kcap=30, z=z)
        assert np.abs(m - m.T).max() == 0.0
        assert np.linalg.eigvalsh(m).min() > -1e-12
        worst_trace = max(worst_trace, float(np.trace(m)))
    assert worst_trace < 60.0  # uniformly bounded jump second moment


def test_diffusion_kcap_truncation_tail():
    for z in (0.2, 0.6, 1.0):
        x = chi_of_z(z, 2.0).chi
        m30 = diffusion_matrix(x, kcap=30, z=z)
        m60 = diffusion_matrix(x, kcap=60, z=z)
        assert np.abs(m30 - m60).max() < 1e-10


def _fd_jacobian(x, rel=3e-6):
    x = np.asarray(x, float)
    jac = np.zeros((4, 4))
    for j in range(3):
        h = rel * max(abs(x[j]), 1e-3)
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (drift_F(xp) - drift_F(xm)) / (2 * h)
    return jac


def test_jacobian_matches_finite_differences():
    for z in np.linspace(0.05, 1.9, 20):
        x = chi_of_z(z, 2.0).chi
        analytic = jacobian_dF(x, z=z)
        numeric = _fd_jacobian(x)
        scale = max(1.0, np.abs(numeric).max())
        assert np.abs(analytic - numeric).max() / scale < 1e-6
        assert np.all(analytic[3] == 0.0)
        assert np.all(analytic[:, 3] == 0.0)


def test_jacobian_eigensystem_limit():
    c = 2.0
    eig = limiting_eigensystem(c)
    target = eig.Q @ eig.D @ np.linalg.inv(eig.Q)
    zs = np.array([0.2, 0.1, 0.05, 0.025])
    errs = np.array([
        np.abs(z * z * jacobian_dF(chi_of_z(z, c).chi, z=z)[:3, :3] - target).max()
        for z in zs
    ])
    assert np.all(np.diff(errs) < 0)  # errors shrink with z
    k_fit = (errs / zs).max()
    assert np.all(errs <= 1.2 * k_fit * zs)  # error O(z) with finite constant


def test_eigensystem_values():
    eig = limiting_eigensystem(math.e)
    assert np.abs(eig.D - 2 * math.e * np.diag([0.0, -3.0, -2.0])).max() < 1e-12
    assert np.abs(eig.v0 - np.array([0.0, 1.0, 1.0])).max() < 1e-12
    for c in (0.5, 1.0, 2.0, math.e):
        e = limiting_eigensystem(c)
        assert np.array_equal(e.Q[:, 0], e.v0)
        assert abs(np.linalg.det(e.Q)) > 1e-6


def test_chi_is_a_trajectory_of_the_drift():
    # d(chi)/ds computed through the z parameterisation equals F(chi)
    c = 2.0
    h = 1e-6
    for z in np.linspace(0.3, 1.9, 15):
        dchi_dz = (chi_of_z(z + h, c).chi - chi_of_z(z - h, c).chi) / (2 * h)
        deriv = dchi_dz / fluid.ds_dz(z, c)
        F = drift_F(chi_of_z(z, c).chi, z=z)
        assert np.abs(deriv - F).max() / np.abs(F).max() < 1e-4


def test_trajectory_monotonicity():
    table = trajectory(2.0, num=200)
    assert np.all(np.diff(table["z"]) < 0)
    assert np.all(np.diff(table["s"]) > 0)
    assert np.all(np.diff(table["chi"][:, 2]) < 0)


def test_truncated_poisson_pmf():
    p = truncated_poisson_pmf(0.0, 6)
    assert p[2] == 1.0 and p.sum() == 1.0
    z = 1.0
    p = truncated_poisson_pmf(z, 30)
    assert abs(p[2] - 0.5 / (math.e - 2.0)) < 1e-12
    assert p[0] == 0.0 and p[1] == 0.0
    assert abs(p.sum() - 1.0) < 1e-10  # tail beyond 30 is negligible at z = 1


def test_domain_errors():
    with pytest.raises(ValueError):
        chi_of_z(2.5, 2.0)  # z > c
    with pytest.raises(ValueError):
        chi_of_z(0.5, 3.5)  # c > e
    with pytest.raises(ValueError):
        diffusion_matrix(chi_of_z(1.0, 2.0).chi, kcap=1)

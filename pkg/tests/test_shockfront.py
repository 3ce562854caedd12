import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import fsolve

from sectorshock.errors import (AdmissibilityError, FrontOutOfRangeError,
                                NotSupersonicError)
from sectorshock.geometry import MappedGrid, ShockFront
from sectorshock.shockfront import (frame, g1_data, jump_residual, mu0, mu_f, unit_radius_normal,
                                    rh_residuals, robin_coefficients, shock_data, update_front)
from sectorshock.upstream import PerturbationSpec, UpstreamFlow

PHI0 = math.pi / 6


@pytest.fixture
def flat(base_profile):
    g = MappedGrid(base_profile.r_sh, 3.0, PHI0, 9, 12)
    return g, ShockFront.constant(g.eta, base_profile.r_sh, PHI0)


def test_flat_front_reduces_to_normal_shock(base_profile, flat):
    g, fr = flat
    sd = shock_data(fr, UpstreamFlow(base_profile))
    np.testing.assert_allclose(sd.K_s, base_profile.gas.k0, rtol=1e-14)
    np.testing.assert_allclose(sd.S_sh, base_profile.S_plus, rtol=1e-12)
    np.testing.assert_allclose(sd.mu, -1.0 / base_profile.r_sh, rtol=1e-14)
    np.testing.assert_allclose(sd.mu_unit_radius, -1.0 / base_profile.r_sh**2, rtol=1e-14)
    np.testing.assert_array_equal(sd.robin, 0.0)
    np.testing.assert_allclose(sd.flux_A, base_profile.flux_A("+") * np.sin(g.eta), rtol=1e-12)


def test_prandtl_product_and_admissibility(base_profile, flat):
    g, _ = flat
    fr = ShockFront(g.eta, base_profile.r_sh + 0.03 * np.cos(6 * g.eta), PHI0)
    sd = shock_data(fr, UpstreamFlow(base_profile, PerturbationSpec(0.02)))
    np.testing.assert_allclose(sd.un_p * sd.un_m, sd.K_s, rtol=1e-14)
    assert np.all(sd.un_m > sd.un_p) and np.all(sd.un_p > 0)
    assert np.all(sd.rho_p > 0)
    res = rh_residuals(sd.n, sd.tau, (sd.rho_m, sd.vel_m, sd.p_m),
                       (sd.rho_p, sd.vel_p, sd.p_p), base_profile.gas)
    assert max(res.values()) < 1e-13


def test_tilted_front_entropy_against_rh_root_finder(base_profile):
    gas, g = base_profile.gas, base_profile.gas.gamma
    amp, phi = 0.02, math.pi / 6

    def front(p):
        return base_profile.r_sh + amp * np.cos(np.asarray(p))

    sd = shock_data(front, UpstreamFlow(base_profile), np.array([phi]))
    f = base_profile.r_sh + amp * math.cos(phi)
    fp = -amp * math.sin(phi)
    n = np.array([f, -fp]) / math.hypot(f, fp)
    rho, u, p = (float(x) for x in base_profile.state(f, "-"))
    un, ut = u * n[0], u * fp / math.hypot(f, fp)

    def eqs(x):
        r2, v2, p2 = x
        return [r2 * v2 - rho * un,
                r2 * v2 * v2 + p2 - (rho * un * un + p),
                0.5 * (v2 * v2 + ut * ut) + g * p2 / ((g - 1) * r2) - gas.b0]

    r2, v2, p2 = fsolve(eqs, [2 * rho, 0.5 * un, 2 * p], xtol=1e-14)
    assert float(sd.S_sh[0]) == pytest.approx(p2 / r2**g, rel=1e-10)
    assert float(sd.un_p[0]) == pytest.approx(v2, rel=1e-10)


def test_unit_radius_normal_agrees_when_flat_or_unit_radius():
    n, _ = frame(2.0, 0.0)
    np.testing.assert_allclose(unit_radius_normal(2.0, 0.0), n)
    n, _ = frame(1.0, 0.3)
    np.testing.assert_allclose(unit_radius_normal(1.0, 0.3), n)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(-5.0, 5.0))
def test_frame_orthonormal(f, fp):
    n, tau = frame(f, fp)
    assert np.linalg.norm(n) == pytest.approx(1.0, rel=1e-15)
    assert np.linalg.norm(tau) == pytest.approx(1.0, rel=1e-15)
    assert abs(n @ tau) < 1e-15


@settings(max_examples=200, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(1e-3, PHI0), st.floats(-1.0, 1.0))
def test_mu_negative_for_small_slope(f, phi, t):
    # |f'| below f tan(phi) keeps the coefficient negative
    fp = 0.99 * t * f * math.tan(phi)
    mu, _ = robin_coefficients(f, fp, phi, 0.0, 0.0, 0.0)
    assert mu < 0


def test_not_supersonic_trace(base_profile, flat):
    _, fr = flat

    class Slow(UpstreamFlow):
        def state(self, r, phi):
            rho, q, p = super().state(r, phi)
            return rho, 0.1 * q, p

    with pytest.raises(NotSupersonicError):
        shock_data(fr, Slow(base_profile))


def test_inadmissible_front(base_profile, flat):
    g, _ = flat
    steep = lambda p: base_profile.r_sh + 0.2 * np.cos(40 * p)  # noqa: E731
    with pytest.raises(AdmissibilityError):
        shock_data(steep, UpstreamFlow(base_profile), g.eta)


def test_update_front_fixed_point(base_profile, flat):
    g, fr = flat
    new, J = update_front(fr, np.zeros(g.n_phi), UpstreamFlow(base_profile), base_profile)
    assert np.max(np.abs(J)) < 1e-14
    np.testing.assert_allclose(new.values, fr.values, atol=1e-14)


def test_update_front_constant_offset(base_profile, flat):
    g, fr = flat
    eps = 1e-4
    slope = float(base_profile.velocity(base_profile.r_sh, "-")
                  - base_profile.velocity(base_profile.r_sh, "+"))

    class Shifted(UpstreamFlow):
        def potential(self, r, phi):
            return super().potential(r, phi) + eps * slope

    new, _ = update_front(fr, np.zeros(g.n_phi), Shifted(base_profile), base_profile, omega=1.0)
    np.testing.assert_allclose(new.values - fr.values, -eps, rtol=1e-3)


def test_update_front_clipping(base_profile, flat):
    g, fr = flat
    with pytest.raises(FrontOutOfRangeError):
        update_front(fr, np.full(g.n_phi, -5.0), UpstreamFlow(base_profile), base_profile,
                     omega=1.0)


def test_jump_residual_sign(base_profile, flat):
    g, fr = flat
    J = jump_residual(fr, np.full(g.n_phi, 0.01), UpstreamFlow(base_profile), base_profile)
    np.testing.assert_allclose(J, -0.01, atol=1e-14)


def test_mu_f_limit(base_profile):
    r = base_profile.r_sh
    m0 = mu0(base_profile)
    assert mu_f(base_profile, r)[0] == m0
    near = mu_f(base_profile, np.array([r - 1e-4, r + 1e-4]))
    np.testing.assert_allclose(near, m0, rtol=1e-3)


def test_g1_vanishes_at_background(base_profile, flat):
    _, fr = flat
    sd = shock_data(fr, UpstreamFlow(base_profile))
    assert np.max(np.abs(g1_data(sd, base_profile))) < 1e-12

import json
import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from conftest import BASE_ENTRANCE, BASE_GEOM, GAMMA, grid_config
from sectorshock.background import exit_pressure_bounds, exit_pressure_for_shock
from sectorshock.driver import (Discretization, SolverConfig, _robin_safe_front, g1_diagnostic,
                                initial_state, solve_fixed_exit_velocity, solve_for_exit_pressure,
                                stability_sweep)
from sectorshock.errors import InvalidInputError, MaxIterations, PressureOutOfRangeError
from sectorshock.gas import source_G
from sectorshock.geometry import MappedGrid, ShockFront
from sectorshock.shockfront import jump_residual, robin_coefficients
from sectorshock.upstream import PerturbationSpec, UpstreamFlow


def test_config_validation():
    with pytest.raises(InvalidInputError):
        SolverConfig(tol_front=0.0)
    with pytest.raises(InvalidInputError):
        SolverConfig(max_picard=0)
    with pytest.raises(InvalidInputError):
        SolverConfig(omega=1.5)


def test_background_is_a_fixed_point(base_profile):
    cfg = grid_config(17)
    g = MappedGrid(base_profile.r_sh, BASE_GEOM.r_ex, BASE_GEOM.phi0, cfg.n_r, cfg.n_phi)
    dz = Discretization(base_profile, UpstreamFlow(base_profile), g)
    st, rep = solve_fixed_exit_velocity(base_profile, PerturbationSpec(0.0),
                                        np.full(g.n_phi, dz.v_c), cfg)
    assert rep.converged
    assert rep.deviations["total"] < 1e-12
    assert rep.v_ex_deviation < 1e-14


def test_swirl_free_family_has_no_swirl(wide_solve):
    st, _, rep = wide_solve(5e-3, 17)
    assert np.all(st.lam == 0.0)
    assert rep.swirl_over_sin == 0.0


def test_radial_exit_pressure_moves_front_to_radial_root(base_profile):
    r_target = 2.04
    p = exit_pressure_for_shock(BASE_GEOM, BASE_ENTRANCE, r_target, GAMMA)
    st, _, rep = solve_for_exit_pressure(base_profile, PerturbationSpec(0.0), p, grid_config(33))
    assert rep.converged
    # the discrete front stays flat and lands at the radial root up to O(h^2)
    assert np.ptp(st.front.values) < 1e-10
    assert float(np.mean(st.front.values)) == pytest.approx(r_target, abs=5 * rep.grid["h"] ** 2)


def test_raising_exit_pressure_moves_front_upstream(base_profile):
    p0 = base_profile.exit_pressure()
    means = []
    for p in (0.99 * p0, p0, 1.01 * p0):
        st, _, _ = solve_for_exit_pressure(base_profile, PerturbationSpec(0.0), p, grid_config(17))
        means.append(float(np.mean(st.front.values)))
    assert means[0] > means[1] > means[2]


def test_report_contents_and_determinism(wide_solve, wide_profile):
    _, _, rep = wide_solve(5e-3, 17)
    assert rep.converged and rep.omega_halvings <= 2
    assert rep.iterations["outer"] >= 1
    d = json.loads(rep.to_json())
    assert set(d["rh_residuals"]) >= {"mass", "momentum", "energy", "tangential"}
    _, _, again = solve_for_exit_pressure(wide_profile, PerturbationSpec(5e-3), None,
                                          grid_config(17))
    a, b = rep.to_dict(), again.to_dict()
    a.pop("elapsed"), b.pop("elapsed")
    assert a == b


def test_sigma_above_threshold_rejected(base_profile):
    with pytest.raises(InvalidInputError):
        solve_for_exit_pressure(base_profile, PerturbationSpec(0.2), None, grid_config(9))


def test_exit_pressure_out_of_range(base_profile):
    lo, hi = exit_pressure_bounds(BASE_GEOM, BASE_ENTRANCE, GAMMA)
    for p in (0.5 * lo, 1.01 * hi):
        with pytest.raises(PressureOutOfRangeError):
            solve_for_exit_pressure(base_profile, PerturbationSpec(0.0), p, grid_config(9))


def test_max_iterations_carries_report(wide_profile):
    cfg = grid_config(17)
    cfg.max_outer = 1
    with pytest.raises(MaxIterations) as exc:
        solve_for_exit_pressure(wide_profile, PerturbationSpec(5e-3), None, cfg)
    rep = exc.value.report
    assert rep is not None and not rep.converged and rep.message


def test_stability_sweep_rows(wide_profile):
    rows, spread, linear = stability_sweep(wide_profile, PerturbationSpec(1.0), [5e-3, 0.0],
                                           grid_config(17))
    assert [r.sigma for r in rows] == [0.0, 5e-3]
    assert rows[0].deviation == 0.0 and rows[1].converged
    assert spread == 0.0 and linear


def test_converged_front_satisfies_jump_condition(wide_solve, wide_profile):
    st, _, rep = wide_solve(5e-3, 17)
    up = UpstreamFlow(wide_profile, PerturbationSpec(5e-3))
    J = jump_residual(st.front, st.chi[0], up, wide_profile)
    assert np.max(np.abs(J)) < 1e-8
    assert rep.rh_residuals["potential_jump"] < 1e-8


def test_g1_scales_linearly_with_sigma(wide_profile):
    cfg = grid_config(17)
    g = MappedGrid(wide_profile.r_sh, 11.5, math.pi / 6, cfg.n_r, cfg.n_phi)
    vals = []
    for s in (1e-3, 2e-3):
        dz = Discretization(wide_profile, UpstreamFlow(wide_profile, PerturbationSpec(s)), g)
        vals.append(g1_diagnostic(dz, initial_state(wide_profile, g)))
    ratio = np.max(np.abs(vals[1])) / np.max(np.abs(vals[0]))
    assert ratio == pytest.approx(2.0, rel=0.02)


def _azimuthal_vorticity(ff, grid, front):
    """``(d_r(r u_phi) - d_phi u_r)/r`` by centred differences on the mapped grid."""
    m = grid.node_metric(front)

    def d(a):
        ax = np.gradient(a, grid.h_xi, axis=0, edge_order=2)
        ae = np.gradient(a, grid.h_eta, axis=1, edge_order=2)
        return ax / m.s, ae - (m.c / m.s) * ax

    d_r, _ = d(ff.r * ff.vel[..., 1])
    _, d_phi = d(ff.vel[..., 0])
    return (d_r - d_phi) / ff.r


@pytest.mark.slow
def test_recovered_curl_matches_vorticity_source(wide_solve, wide_profile):
    # constant Bernoulli turns Crocco's relation into omega_theta = G
    errs = []
    for n in (17, 33):
        st, ff, _ = wide_solve(1e-2, n, a_lam=0.5)
        g = MappedGrid(wide_profile.r_sh, 11.5, math.pi / 6, n, (n - 1) // 2 + 1)
        om = _azimuthal_vorticity(ff, g, st.front)
        G = source_G(ff.r, g.eta[None, :], st.S, st.lam, st.dS, st.dlam, ff.vel, wide_profile.gas)
        X, E = np.meshgrid(g.xi, g.eta, indexing="ij")
        box = (X > 10.3) & (X < 11.2) & (E > 0.1) & (E < 0.4)
        errs.append(np.max(np.abs(om - G)[box]) / np.max(np.abs(G)))
    assert errs[0] < 1e-2
    assert errs[1] < 0.6 * errs[0]


@pytest.mark.slow
def test_deviation_converges_under_refinement(wide_solve):
    d = [wide_solve(5e-3, n)[2].deviations["total"] for n in (17, 33, 65)]
    assert abs(d[1] - d[2]) < 0.5 * abs(d[0] - d[1])
    assert abs(d[1] - d[2]) < 0.01 * d[2]


@pytest.mark.slow
def test_jump_residual_on_finer_front_sampling(wide_solve, wide_profile):
    st, _, _ = wide_solve(5e-3, 33)
    eta = st.front.phi
    phi0 = math.pi / 6
    # even reflection about the axis and the wall
    ext = np.concatenate([-eta[::-1], eta, 2 * phi0 - eta[::-1]])
    c0 = st.chi[0]
    chi = CubicSpline(ext, np.concatenate([c0[::-1], c0, c0[::-1]]))
    fine = np.linspace(0.0, phi0, 4 * eta.size)
    f = st.front(fine)
    up = UpstreamFlow(wide_profile, PerturbationSpec(5e-3))
    J = up.potential(f, fine) - wide_profile.potential(f, "+") - chi(fine)
    assert np.max(np.abs(J)) < 1e-8


def test_front_step_keeps_robin_coefficient_negative(base_profile):
    g = MappedGrid(base_profile.r_sh, 3.0, math.pi / 6, 9, 12)
    fr = ShockFront.constant(g.eta, base_profile.r_sh, g.phi0)
    # a steep bump would flip the sign at full step; the halved step keeps it
    delta = -0.2 * np.cos(6 * g.eta)
    full = ShockFront(g.eta, fr.values + delta, g.phi0)
    mu, _ = robin_coefficients(full.values, full.deriv(full.phi), full.phi, 0.0, 0.0, 0.0)
    assert np.any(mu >= 0)
    new = _robin_safe_front(fr, delta, base_profile.r_sh, 1.0)
    mu, _ = robin_coefficients(new.values, new.deriv(new.phi), new.phi, 0.0, 0.0, 0.0)
    assert np.all(mu < 0)
    assert np.max(np.abs(new.values - fr.values)) < 0.2

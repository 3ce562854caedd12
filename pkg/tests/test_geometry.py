import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sectorshock.errors import InvalidInputError, OutOfDomainError
from sectorshock.geometry import (REFLECTION_COEFFS, FrontMap, MappedGrid, ShockFront,
                                  boundary_distance, extend_field, jacobian, map_point,
                                  reflection_coefficients, weighted_norm, weighted_norm_parts)

PHI0 = math.pi / 6


def wavy(amp=0.05, r_sh=1.5):
    return lambda phi: r_sh + amp * np.cos(math.pi * np.asarray(phi) / PHI0)


def test_map_point_examples():
    fm = FrontMap(1.6, 1.5, 3.0)
    assert float(map_point(fm, 2.0, 0.2)) == pytest.approx(1.5 / 1.4 * (2 - 3) + 3, rel=1e-15)
    assert float(map_point(fm, 2.0, 0.2)) == pytest.approx(1.9285714285714286, rel=1e-15)
    assert float(map_point(fm, 3.0, 0.3)) == 3.0
    same = FrontMap(wavy(), wavy(), 3.0)
    assert float(map_point(same, 2.2, 0.4)) == pytest.approx(2.2, rel=1e-15)


def test_map_point_domain():
    with pytest.raises(OutOfDomainError):
        map_point(FrontMap(1.6, 1.5, 3.0), 1.55, 0.1)
    with pytest.raises(OutOfDomainError):
        map_point(FrontMap(3.0, 1.5, 3.0), 2.0, 0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, PHI0), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_map_round_trip(t, phi, a, b):
    f = lambda p: 1.5 + a * np.cos(6 * p)  # noqa: E731
    g = lambda p: 1.5 + b * np.sin(3 * p) ** 2  # noqa: E731
    fm = FrontMap(f, g, 3.0)
    r = f(phi) + t * (3.0 - f(phi))
    back = fm.inverse().map_point(fm.map_point(r, phi), phi)
    assert float(back) == pytest.approx(r, abs=1e-13)


def test_jacobian_identity_and_finite_differences(rng):
    ident = FrontMap(1.5, 1.5, 3.0)
    np.testing.assert_allclose(jacobian(ident, 2.0, 0.3), np.eye(3), atol=1e-15)
    fm = FrontMap(wavy(0.08), 1.5, 3.0)
    h = 1e-6
    for _ in range(10):
        phi = rng.uniform(0.05, PHI0 - 0.05)
        theta = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(1.7, 2.9)
        J = jacobian(fm, r, phi, theta)
        x = r * np.array([math.sin(phi) * math.cos(theta), math.sin(phi) * math.sin(theta),
                          math.cos(phi)])
        fd = np.empty((3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd[i] = (fm.cartesian(x + e) - fm.cartesian(x - e)) / (2 * h)
        np.testing.assert_allclose(J, fd, atol=1e-6)
        assert np.linalg.det(J) > 0


def test_reflection_coefficients():
    np.testing.assert_allclose(reflection_coefficients(), (6.0, -32.0, 27.0), atol=1e-12)
    assert REFLECTION_COEFFS == (6.0, -32.0, 27.0)
    assert sum(REFLECTION_COEFFS) == 1.0


def test_extension_reproduces_quadratics():
    g = MappedGrid(1.5, 3.0, PHI0, 33, 8)
    for poly in (lambda x: 0 * x + 2.5, lambda x: x - 1.5, lambda x: (x - 1.5) ** 2 - 0.3 * x):
        field = np.repeat(poly(g.xi)[:, None], g.n_phi, axis=1)
        xi_ext, ext = extend_field(field, g)
        np.testing.assert_allclose(ext, np.repeat(poly(xi_ext)[:, None], g.n_phi, axis=1),
                                   atol=1e-12)


def test_front_spline_meets_axis_and_wall_at_right_angle():
    g = MappedGrid(1.5, 3.0, PHI0, 9, 12)
    fr = ShockFront(g.eta, 1.5 + 0.03 * np.cos(2 * g.eta) + 0.01 * g.eta, PHI0)
    assert abs(fr.deriv(0.0)) < 1e-13
    assert abs(fr.deriv(PHI0)) < 1e-13
    np.testing.assert_allclose(fr(g.eta), fr.values, atol=1e-14)
    assert fr.in_band(1.5)
    assert not ShockFront.constant(g.eta, 1.8, PHI0).in_band(1.5)
    with pytest.raises(InvalidInputError):
        ShockFront(g.eta, g.eta[:-1], PHI0)


def test_front_spline_second_order():
    errs = []
    for n in (16, 32, 64):
        g = MappedGrid(1.5, 3.0, PHI0, 9, n)
        exact = wavy(0.05)
        fr = ShockFront(g.eta, exact(g.eta), PHI0)
        fine = np.linspace(0, PHI0, 401)
        errs.append(np.max(np.abs(fr(fine) - exact(fine))))
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_grid_layout_and_csv(tmp_path):
    g = MappedGrid(1.5, 3.0, PHI0, 5, 4)
    assert g.shape == (5, 4)
    assert g.eta[0] == pytest.approx(0.5 * g.h_eta)
    assert g.volumes.sum() == pytest.approx(1.5 * PHI0)
    assert g.refined().shape == (9, 8)
    g.to_csv(tmp_path / "grid.csv")
    assert (tmp_path / "grid.csv").read_text().startswith("i,j,xi,eta,r")
    with pytest.raises(InvalidInputError):
        MappedGrid(1.5, 3.0, PHI0, 3, 4)


def test_metric_jacobian_positive_for_admissible_front():
    g = MappedGrid(1.5, 3.0, PHI0, 17, 8)
    m = g.node_metric(wavy(0.2))
    assert np.all(m.s > 0)
    assert np.all(np.diff(m.r, axis=0) > 0)


def test_weighted_norm_basic():
    g = MappedGrid(1.5, 3.0, PHI0, 17, 8)
    assert weighted_norm(np.zeros(g.shape), g) == 0.0
    assert weighted_norm(np.full(g.shape, -3.0), g, k=0.0) == pytest.approx(3.0)
    with pytest.raises(InvalidInputError):
        weighted_norm(np.zeros(g.shape), g, alpha=1.5)


def test_weighted_norm_closed_form():
    g = MappedGrid(1.5, 3.0, PHI0, 65, 65)
    alpha = 0.6
    d = boundary_distance(g, "wall")
    sup, _ = weighted_norm_parts(d ** (1 - alpha), g, k=-alpha, alpha=alpha, order=0)
    assert sup == pytest.approx(float(np.max(d)) ** (1 - alpha), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 1000))
def test_weighted_norm_homogeneous_and_subadditive(lam, seed):
    g = MappedGrid(1.5, 3.0, PHI0, 9, 6)
    r = np.random.default_rng(seed)
    u, v = r.normal(size=g.shape), r.normal(size=g.shape)
    nu, nv = weighted_norm(u, g), weighted_norm(v, g)
    assert weighted_norm(lam * u, g) == pytest.approx(abs(lam) * nu, rel=1e-12, abs=1e-300)
    assert weighted_norm(u + v, g) <= nu + nv + 1e-12

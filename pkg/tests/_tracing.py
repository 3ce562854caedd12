"""RK4 streamline tracing on recovered velocity fields (test oracle)."""
from __future__ import annotations

import numpy as np
from scipy.interpolate import RectBivariateSpline


def _ghosted(grid, a, parity):
    left = parity * a[:, :2][:, ::-1]
    right = parity * a[:, -2:][:, ::-1]
    return np.concatenate([left, a, right], axis=1)


def velocity_splines(fields, grid):
    """Bicubic ``(u_r, u_phi)`` in computational coordinates.

    Two reflected columns on each side encode the even/odd symmetry of
    the components about the axis and the wall.
    """
    eta = np.concatenate([-grid.eta[:2][::-1], grid.eta, 2 * grid.phi0 - grid.eta[-2:][::-1]])
    ur = RectBivariateSpline(grid.xi, eta, _ghosted(grid, fields.vel[..., 0], 1.0))
    up = RectBivariateSpline(grid.xi, eta, _ghosted(grid, fields.vel[..., 1], -1.0))
    return ur, up


def trace_to_front(fields, front, grid, xi, eta, steps: int = 200) -> float:
    """Follow the streamline through ``(xi, eta)`` back to the front.

    Uses ``xi`` as the integration variable so the front is reached
    exactly at ``xi = r_sh``; returns the angle there.
    """
    ur, up = velocity_splines(fields, grid)
    L = grid.r_ex - grid.r_sh

    def slope(x, e):
        f, fp = front(e), front.deriv(e)
        s = (grid.r_ex - f) / L
        c = (x - grid.r_ex) * (-fp / L)
        r = grid.r_ex + s * (x - grid.r_ex)
        a, b = ur(x, e, grid=False), up(x, e, grid=False)
        return (b / r) * s / (a - c * b / r)

    h = (grid.r_sh - xi) / steps
    x, e = float(xi), float(eta)
    for _ in range(steps):
        k1 = slope(x, e)
        k2 = slope(x + h / 2, e + h / 2 * k1)
        k3 = slope(x + h / 2, e + h / 2 * k2)
        k4 = slope(x + h, e + h * k3)
        e += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
    return float(e)

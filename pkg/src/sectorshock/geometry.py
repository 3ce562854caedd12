"""Shock-fitted geometry: fronts, radial maps, the computational grid.

The downstream region ``f(phi) < r < r_ex`` is carried onto the fixed
rectangle ``r_sh <= xi <= r_ex``, ``0 <= eta <= phi0`` by the radial
affine map that keeps the exit fixed.  The grid is vertex-centred in
``xi`` and cell-centred in ``eta`` so no unknown sits on the axis.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import InvalidInputError, OutOfDomainError

FrontLike = Union[float, "ShockFront", Callable]

# weights c_i with sum_i c_i (-1/i)^m = 1 for m = 0, 1, 2
REFLECTION_COEFFS = (6.0, -32.0, 27.0)


def reflection_coefficients(order: int = 3) -> np.ndarray:
    """Solve ``sum_i c_i (-1/i)^m = 1`` for ``m < order``."""
    i = np.arange(1, order + 1, dtype=float)
    V = np.vstack([(-1.0 / i) ** m for m in range(order)])
    return np.linalg.solve(V, np.ones(order))


# -- fronts ----------------------------------------------------------------

class ShockFront:
    """Front ``r = f(phi)`` from nodal values on the cell-centred grid.

    The data are reflected evenly about the axis and about the wall and
    fitted by a periodic cubic spline, so ``f'(0) = f'(phi0) = 0`` hold
    exactly: the front meets both the axis and the wall at a right angle.
    """

    def __init__(self, phi: np.ndarray, values: np.ndarray, phi0: float):
        phi = np.asarray(phi, dtype=float)
        values = np.asarray(values, dtype=float)
        if phi.shape != values.shape or phi.ndim != 1:
            raise InvalidInputError("front nodes and values must be 1-D of equal size")
        self.phi, self.values, self.phi0 = phi, values.copy(), float(phi0)
        x = np.concatenate([-phi[::-1], phi, [2.0 * self.phi0 - phi[-1]]])
        y = np.concatenate([values[::-1], values, [values[-1]]])
        self._sp = CubicSpline(x, y, bc_type="periodic")
        self._d1 = self._sp.derivative(1)
        self._d2 = self._sp.derivative(2)

    @classmethod
    def constant(cls, phi, value: float, phi0: float) -> "ShockFront":
        return cls(phi, np.full(np.shape(phi), float(value)), phi0)

    def __call__(self, phi) -> np.ndarray:
        return self._sp(phi)

    def deriv(self, phi, n: int = 1) -> np.ndarray:
        return (self._d1 if n == 1 else self._d2)(phi)

    def in_band(self, r_sh: float, band: float = 0.25) -> bool:
        v = self(np.linspace(0.0, self.phi0, 4 * len(self.phi) + 1))
        return bool(np.all(np.abs(v - r_sh) < band))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "f", "df"])
            for p, v, d in zip(self.phi, self.values, self.deriv(self.phi)):
                w.writerow([f"{p:.16e}", f"{v:.16e}", f"{d:.16e}"])


def _front_eval(front: FrontLike, phi, n: int = 0):
    if isinstance(front, ShockFront):
        return front(phi) if n == 0 else front.deriv(phi, n)
    if callable(front):
        if n == 0:
            return np.asarray(front(phi), dtype=float)
        h = 1e-6
        return (np.asarray(front(phi + h)) - np.asarray(front(phi - h))) / (2 * h)
    val = float(front)
    return np.full(np.shape(phi), val) if n == 0 else np.zeros(np.shape(phi))


# -- radial maps ---------------------------------------------------------------

@dataclass(frozen=True)
class FrontMap:
    """Radial map from the region behind ``src`` to the region behind ``tgt``.

    ``r~ = (r_ex - g)/(r_ex - f) (r - r_ex) + r_ex`` with ``f = src(phi)``
    and ``g = tgt(phi)``.  Swapping the fronts inverts the map.
    """

    src: FrontLike
    tgt: FrontLike
    r_ex: float

    def inverse(self) -> "FrontMap":
        return FrontMap(self.tgt, self.src, self.r_ex)

    def _ratio(self, phi):
        f = _front_eval(self.src, phi)
        g = _front_eval(self.tgt, phi)
        if np.any(np.abs(self.r_ex - f) <= 0) or np.any(np.abs(self.r_ex - g) <= 0):
            raise OutOfDomainError("front touches the exit")
        return f, g, (self.r_ex - g) / (self.r_ex - f)

    def map_point(self, r, phi, check: bool = True) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        f, g, k = self._ratio(phi)
        if check:
            tol = 1e-12 * self.r_ex
            if np.any(r < f - tol) or np.any(r > self.r_ex + tol):
                raise OutOfDomainError("point outside [f(phi), r_ex]")
        return k * (r - self.r_ex) + self.r_ex

    def radial_derivatives(self, r, phi):
        """``(d r~/dr, d r~/dphi)`` at the given points."""
        r = np.asarray(r, dtype=float)
        f, g, k = self._ratio(phi)
        fp = _front_eval(self.src, phi, 1)
        gp = _front_eval(self.tgt, phi, 1)
        dk = (-gp * (self.r_ex - f) + fp * (self.r_ex - g)) / (self.r_ex - f) ** 2
        return k * np.ones_like(r), dk * (r - self.r_ex)

    def jacobian(self, r: float, phi: float, theta: float = 0.0) -> np.ndarray:
        """Cartesian Jacobian ``J[i, j] = d y_j / d x_i`` of the 3-D map."""
        rt = float(self.map_point(r, phi))
        drr, drp = self.radial_derivatives(r, phi)
        e_r = np.array([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])
        e_p = np.array([np.cos(phi) * np.cos(theta), np.cos(phi) * np.sin(theta), -np.sin(phi)])
        grad_rt = float(drr) * e_r + float(drp) / r * e_p
        return np.outer(grad_rt, e_r) + (rt / r) * (np.eye(3) - np.outer(e_r, e_r))

    def cartesian(self, x: np.ndarray) -> np.ndarray:
        """Apply the map to a Cartesian point (axis along ``z``)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        phi = np.arccos(np.clip(x[2] / r, -1.0, 1.0))
        return self.map_point(r, phi, check=False) * x / r


# -- computational grid ----------------------------------------------------------

@dataclass
class Metric:
    """Map data at sample points of the rectangle for a given front.

    ``r = r_ex + s (xi - r_ex)``, ``s = (r_ex - f)/(r_ex - r_sh)`` and
    ``c = (xi - r_ex) ds/deta``.  A flux ``(P, Q) = (r^2 sin A_r, r sin A_phi)``
    has computational components ``(P - c Q, s Q)``.
    """

    r: np.ndarray
    s: np.ndarray
    c: np.ndarray
    sin: np.ndarray
    cos: np.ndarray


class MappedGrid:
    """Tensor grid on ``[r_sh, r_ex] x [0, phi0]``.

    Nodes ``xi_i = r_sh + i h_xi`` include both ends; ``eta_j = (j + 1/2) h_eta``.
    Arrays on the grid have shape ``(n_r, n_phi)``.
    """

    def __init__(self, r_sh: float, r_ex: float, phi0: float, n_r: int, n_phi: int):
        if n_r < 4 or n_phi < 3:
            raise InvalidInputError("grid needs n_r >= 4 and n_phi >= 3")
        if not r_sh < r_ex:
            raise InvalidInputError("need r_sh < r_ex")
        self.r_sh, self.r_ex, self.phi0 = float(r_sh), float(r_ex), float(phi0)
        self.n_r, self.n_phi = int(n_r), int(n_phi)
        self.xi = np.linspace(r_sh, r_ex, n_r)
        self.h_xi = (r_ex - r_sh) / (n_r - 1)
        self.h_eta = phi0 / n_phi
        self.eta = (np.arange(n_phi) + 0.5) * self.h_eta
        self.eta_faces = np.arange(n_phi + 1) * self.h_eta
        w = np.full(n_r, self.h_xi)
        w[0] = w[-1] = 0.5 * self.h_xi
        self.widths = w
        self.xi_mid = 0.5 * (self.xi[1:] + self.xi[:-1])

    @property
    def shape(self):
        return (self.n_r, self.n_phi)

    @property
    def size(self) -> int:
        return self.n_r * self.n_phi

    @property
    def h(self) -> float:
        return max(self.h_xi, self.h_eta)

    def refined(self, factor: int = 2) -> "MappedGrid":
        return MappedGrid(self.r_sh, self.r_ex, self.phi0,
                          factor * (self.n_r - 1) + 1, factor * self.n_phi)

    @cached_property
    def volumes(self) -> np.ndarray:
        return self.widths[:, None] * self.h_eta * np.ones(self.n_phi)

    def metric(self, front: FrontLike, xi, eta) -> Metric:
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        f = _front_eval(front, eta)
        fp = _front_eval(front, eta, 1)
        L = self.r_ex - self.r_sh
        s = (self.r_ex - f) / L
        c = (xi - self.r_ex) * (-fp / L)
        r = self.r_ex + s * (xi - self.r_ex)
        return Metric(r, s, c, np.sin(eta), np.cos(eta))

    def node_metric(self, front: FrontLike) -> Metric:
        X, E = np.meshgrid(self.xi, self.eta, indexing="ij")
        return self.metric(front, X, E)

    def east_metric(self, front: FrontLike) -> Metric:
        X, E = np.meshgrid(self.xi_mid, self.eta, indexing="ij")
        return self.metric(front, X, E)

    def north_metric(self, front: FrontLike) -> Metric:
        X, E = np.meshgrid(self.xi, self.eta_faces, indexing="ij")
        return self.metric(front, X, E)

    def physical_r(self, front: FrontLike) -> np.ndarray:
        return self.node_metric(front).r

    # -- difference operators ------------------------------------------------
    def _idx(self, i, j):
        return i * self.n_phi + j

    def operators(self, axis_parity: int, wall_parity: int) -> dict:
        """Sparse difference operators for one reflection parity.

        ``axis_parity``/``wall_parity`` are ``+1`` for even reflection and
        ``-1`` for odd reflection (zero value on the face).  Keys: ``Cx``,
        ``Ce`` node derivatives; ``Ex``, ``Ee``, ``Ev`` east-face derivatives
        and value; ``Nx``, ``Ne``, ``Nv`` north-face derivatives and value.
        """
        key = (axis_parity, wall_parity)
        cache = self.__dict__.setdefault("_op_cache", {})
        if key not in cache:
            cache[key] = self._build_ops(axis_parity, wall_parity)
        return cache[key]

    def _build_ops(self, pa: int, pw: int) -> dict:
        nr, nt, hx, he = self.n_r, self.n_phi, self.h_xi, self.h_eta
        N = nr * nt

        def col(i, j):
            # fold ghost columns; returns (index, factor)
            if j < 0:
                return self._idx(i, -1 - j), float(pa)
            if j >= nt:
                return self._idx(i, 2 * nt - 1 - j), float(pw)
            return self._idx(i, j), 1.0

        def mat(entries, nrows):
            rows, cols, vals = zip(*entries) if entries else ((), (), ())
            return sp.csr_matrix((vals, (rows, cols)), shape=(nrows, N))

        def dxi_node(i, j):
            if 0 < i < nr - 1:
                return [(i + 1, j, 0.5 / hx), (i - 1, j, -0.5 / hx)]
            if i == 0:
                return [(0, j, -1.5 / hx), (1, j, 2.0 / hx), (2, j, -0.5 / hx)]
            return [(nr - 1, j, 1.5 / hx), (nr - 2, j, -2.0 / hx), (nr - 3, j, 0.5 / hx)]

        def emit(out, row, terms, scale=1.0):
            for (i, j, v) in terms:
                c, fac = col(i, j)
                if fac != 0.0:
                    out.append((row, c, v * fac * scale))

        Cx, Ce = [], []
        for i in range(nr):
            for j in range(nt):
                k = self._idx(i, j)
                emit(Cx, k, dxi_node(i, j))
                emit(Ce, k, [(i, j + 1, 0.5 / he), (i, j - 1, -0.5 / he)])
        Ex, Ee, Ev = [], [], []
        for i in range(nr - 1):
            for j in range(nt):
                k = i * nt + j
                emit(Ex, k, [(i + 1, j, 1.0 / hx), (i, j, -1.0 / hx)])
                emit(Ee, k, [(i, j + 1, 0.25 / he), (i, j - 1, -0.25 / he),
                             (i + 1, j + 1, 0.25 / he), (i + 1, j - 1, -0.25 / he)])
                emit(Ev, k, [(i, j, 0.5), (i + 1, j, 0.5)])
        Nx, Ne, Nv = [], [], []
        for i in range(nr):
            for jf in range(nt + 1):
                k = i * (nt + 1) + jf
                emit(Nx, k, dxi_node(i, jf - 1), 0.5)
                emit(Nx, k, dxi_node(i, jf), 0.5)
                emit(Ne, k, [(i, jf, 1.0 / he), (i, jf - 1, -1.0 / he)])
                emit(Nv, k, [(i, jf, 0.5), (i, jf - 1, 0.5)])
        nE, nN = (nr - 1) * nt, nr * (nt + 1)
        return dict(Cx=mat(Cx, N), Ce=mat(Ce, N), Ex=mat(Ex, nE), Ee=mat(Ee, nE),
                    Ev=mat(Ev, nE), Nx=mat(Nx, nN), Ne=mat(Ne, nN), Nv=mat(Nv, nN))

    @cached_property
    def divergence(self):
        """``(D_east, D_north)`` mapping face fluxes to net cell outflow.

        East fluxes are per unit ``eta`` and north fluxes per unit ``xi``;
        the operators include the face lengths.  Boundary faces in ``xi``
        are excluded and must be added separately.
        """
        nr, nt = self.n_r, self.n_phi
        N = nr * nt
        rows, cols, vals = [], [], []
        for i in range(nr - 1):
            for j in range(nt):
                k = i * nt + j
                rows += [self._idx(i, j), self._idx(i + 1, j)]
                cols += [k, k]
                vals += [self.h_eta, -self.h_eta]
        DE = sp.csr_matrix((vals, (rows, cols)), shape=(N, (nr - 1) * nt))
        rows, cols, vals = [], [], []
        for i in range(nr):
            for jf in range(nt + 1):
                k = i * (nt + 1) + jf
                if jf < nt:
                    rows.append(self._idx(i, jf))
                    cols.append(k)
                    vals.append(-self.widths[i])
                if jf > 0:
                    rows.append(self._idx(i, jf - 1))
                    cols.append(k)
                    vals.append(self.widths[i])
        DN = sp.csr_matrix((vals, (rows, cols)), shape=(N, nr * (nt + 1)))
        return DE, DN

    def to_csv(self, path, front: FrontLike | None = None) -> None:
        front = self.r_sh if front is None else front
        r = self.physical_r(front)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "xi", "eta", "r"])
            for i in range(self.n_r):
                for j in range(self.n_phi):
                    w.writerow([i, j, f"{self.xi[i]:.16e}", f"{self.eta[j]:.16e}",
                                f"{r[i, j]:.16e}"])


def map_point(fm: FrontMap, r, phi):
    return fm.map_point(r, phi)


def jacobian(fm: FrontMap, r, phi, theta: float = 0.0):
    return fm.jacobian(r, phi, theta)


# -- reflection extension -----------------------------------------------------------

def extend_field(field: np.ndarray, grid: MappedGrid, n_ghost: int = 3) -> tuple:
    """Extend a grid field across ``xi = r_sh`` by three-term reflection.

    The ghost value at ``r_sh - d`` is ``sum_i c_i u(r_sh + d/i)`` with
    ``c = (6, -32, 27)``; off-node samples use a cubic spline in ``xi``.

    Returns
    -------
    xi_ext, field_ext : ndarray
        Extended coordinates (ghosts first) and values.
    """
    field = np.asarray(field, dtype=float)
    c = REFLECTION_COEFFS
    spl = CubicSpline(grid.xi, field, axis=0)
    d = grid.h_xi * np.arange(n_ghost, 0, -1)
    ghosts = sum(ci * spl(grid.r_sh + d / (i + 1)) for i, ci in enumerate(c))
    xi_ext = np.concatenate([grid.r_sh - d, grid.xi])
    return xi_ext, np.concatenate([ghosts, field], axis=0)


# -- weighted norms --------------------------------------------------------------------

def boundary_distance(grid: MappedGrid, edge: str) -> np.ndarray:
    """Distance of each node to a boundary portion of the reference sector."""
    X, E = np.meshgrid(grid.xi, grid.eta, indexing="ij")
    if edge == "wall":
        return X * np.sin(grid.phi0 - E)
    if edge == "shock":
        return X - grid.r_sh
    if edge == "exit":
        return grid.r_ex - X
    if edge == "corner":
        # corner circle where the shock meets the wall
        x0, y0 = grid.r_sh * np.cos(grid.phi0), grid.r_sh * np.sin(grid.phi0)
        return np.hypot(X * np.cos(E) - x0, X * np.sin(E) - y0)
    raise InvalidInputError(f"unknown edge {edge!r}")


def _pairs(nr, nt, n_random=200, seed=0):
    I, J = np.meshgrid(np.arange(nr), np.arange(nt), indexing="ij")
    a_list, b_list = [], []
    for di in range(0, 3):
        for dj in range(-2, 3):
            if di == 0 and dj <= 0:
                continue
            ii, jj = I + di, J + dj
            ok = (ii < nr) & (jj >= 0) & (jj < nt)
            a_list.append((I * nt + J)[ok])
            b_list.append((ii * nt + jj)[ok])
    rng = np.random.default_rng(seed)
    a_list.append(rng.integers(0, nr * nt, n_random))
    b_list.append(rng.integers(0, nr * nt, n_random))
    return np.concatenate(a_list), np.concatenate(b_list)


def weighted_norm_parts(field, grid: MappedGrid, k: float = 0.0, alpha: float = 0.6,
                        edge: str = "wall", order: int = 1):
    """Weighted sup part and sampled weighted Hoelder part of the norm."""
    u = np.asarray(field, dtype=float)
    dlt = boundary_distance(grid, edge)
    X, E = np.meshgrid(grid.xi, grid.eta, indexing="ij")
    derivs = [(0, [u])]
    if order >= 1:
        du_r = np.gradient(u, grid.xi, axis=0)
        du_p = np.gradient(u, grid.eta, axis=1) / X
        derivs.append((1, [du_r, du_p]))
    sup = 0.0
    for m, comps in derivs:
        w = np.where(dlt > 0, dlt, 0.0) ** max(m + k, 0.0)
        sup += max(float(np.max(w * np.abs(cmp))) for cmp in comps)
    ia, ib = _pairs(grid.n_r, grid.n_phi)
    x, y = (X * np.cos(E)).ravel(), (X * np.sin(E)).ravel()
    m, comps = derivs[-1]
    wexp = max(m + alpha + k, 0.0)
    hold = max(_kernels.holder_quotient(cmp.ravel(), x, y, dlt.ravel(), ia, ib, alpha, wexp)
               for cmp in comps)
    return sup, hold


def weighted_norm(field, grid: MappedGrid, k: float = 0.0, alpha: float = 0.6,
                  edge: str = "wall", order: int = 1) -> float:
    """Discrete estimate of a boundary-weighted Hoelder norm.

    Sums ``sup delta^max(|b|+k, 0) |D^b u|`` over ``|b| <= order`` and a
    Hoelder quotient sampled on all pairs within a 5-node stencil plus
    200 fixed random pairs.  Diagnostic only.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError("alpha must lie in (0, 1)")
    s, h = weighted_norm_parts(field, grid, k, alpha, edge, order)
    return s + h

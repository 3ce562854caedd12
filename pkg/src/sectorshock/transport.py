"""Transport of entropy and swirl along discrete streamlines.

The entropy-free flux is divergence free downstream, so its radial
component integrated in ``eta`` from the axis is a stream function ``w``.
Here ``w`` is accumulated from the same face fluxes the elliptic scheme
balances, which makes its level sets the discrete streamlines.  A point
is traced back to the front through ``K = G^{-1}(w)`` with ``G`` the
stream function on the front.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator, RectBivariateSpline

from ._kernels import hermite_inverse
from .errors import ReversedFlowError
from .geometry import FrontLike, MappedGrid

FD_STEP = 1e-6


@dataclass
class StreamFunctionField:
    """Stream function on the mapped grid.

    Attributes
    ----------
    density : ndarray, shape (n_r, n_phi)
        Radial flux per unit ``eta`` at the nodes, the ``eta``-derivative of ``w``.
    w_faces : ndarray, shape (n_r, n_phi + 1)
        ``w`` at the ``eta`` faces; row 0 is ``G``.
    w : ndarray, shape (n_r, n_phi)
        ``w`` at the nodes.
    """

    grid: MappedGrid
    front: FrontLike
    density: np.ndarray
    w_faces: np.ndarray
    w: np.ndarray
    _g: PchipInterpolator = field(repr=False, default=None)

    @property
    def G(self) -> np.ndarray:
        return self.w_faces[0]

    @property
    def total_flux(self) -> np.ndarray:
        """``w`` at the wall for every radial line; constant if flux is conserved."""
        return self.w_faces[:, -1]

    def invert(self, values) -> np.ndarray:
        """``G^{-1}`` by monotone bisection and a secant polish."""
        xk = self.grid.eta_faces
        return hermite_inverse(xk, self.G, self._g.derivative()(xk), values)

    def dG(self, phi) -> np.ndarray:
        return self._g.derivative()(phi)

    def cell_slope(self, phi) -> np.ndarray:
        """Mean of ``G'`` over a cell-wide window centred at ``phi``.

        Matches the cell-averaged ``density`` so that ``K = eta`` has unit
        slope exactly when ``w`` is independent of ``xi``.
        """
        h, phi0 = self.grid.h_eta, self.grid.phi0
        lo = np.clip(phi - h / 2, 0.0, phi0 - h)
        return (self._g(lo + h) - self._g(lo)) / h


def build_stream_function(grid: MappedGrid, front: FrontLike, east_flux, shock_flux,
                          exit_flux) -> StreamFunctionField:
    """Accumulate ``w`` from conservative face fluxes.

    Parameters
    ----------
    east_flux : ndarray, shape (n_r - 1, n_phi)
        Computational radial flux per unit ``eta`` through interior faces.
    shock_flux, exit_flux : ndarray, shape (n_phi,)
        The same through the front and the exit.

    Raises
    ------
    ReversedFlowError
        If any radial flux is not positive.
    """
    east = np.asarray(east_flux, dtype=float)
    dens = np.empty(grid.shape)
    dens[0] = shock_flux
    dens[-1] = exit_flux
    dens[1:-1] = 0.5 * (east[:-1] + east[1:])
    if np.any(east <= 0.0) or np.any(dens <= 0.0):
        raise ReversedFlowError("radial mass flux is not positive everywhere")
    wf = np.zeros((grid.n_r, grid.n_phi + 1))
    wf[:, 1:] = np.cumsum(dens, axis=1) * grid.h_eta
    lines = PchipInterpolator(grid.eta_faces, wf.T, axis=0)
    g = PchipInterpolator(grid.eta_faces, wf[0])
    w = lines(grid.eta).T
    w[0] = g(grid.eta)
    return StreamFunctionField(grid, front, dens, wf, w, g)


@dataclass
class Footpoints:
    """Front angle ``K`` reached by tracing each node upstream.

    ``dK`` is the derivative along ``phi`` at fixed physical radius.
    """

    K: np.ndarray
    dK: np.ndarray
    dK_eta: np.ndarray

    def lipschitz_bounds(self, phi0: float) -> tuple[float, float]:
        """Extreme slopes of ``(K(phi0) - K(phi))/(phi0 - phi)`` along each line."""
        return float(self.dK_eta.min()), float(self.dK_eta.max())


def footpoints(sf: StreamFunctionField) -> Footpoints:
    """``K = G^{-1}(w)`` at every node, with chain-rule derivatives."""
    grid = sf.grid
    K = sf.invert(sf.w)
    dK_eta = sf.density / sf.cell_slope(K)
    dK_xi = np.gradient(K, grid.h_xi, axis=0, edge_order=2)
    m = grid.node_metric(sf.front)
    return Footpoints(K, dK_eta - (m.c / m.s) * dK_xi, dK_eta)


def footpoint(sf: StreamFunctionField, xi, eta) -> np.ndarray:
    """Footpoint of arbitrary computational points via a bicubic ``w``."""
    grid = sf.grid
    spl = RectBivariateSpline(grid.xi, grid.eta_faces, sf.w_faces, kx=3, ky=3)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    w = spl(xi.ravel(), eta.ravel(), grid=False).reshape(np.broadcast(xi, eta).shape)
    return sf.invert(w)


def transport_scalar(data: Callable, sf: StreamFunctionField,
                     fp: Footpoints | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Compose front data with the footpoint map.

    Parameters
    ----------
    data : callable
        Function of the front angle.
    sf : StreamFunctionField
    fp : Footpoints, optional
        Reused when already computed.

    Returns
    -------
    value, dphi : ndarray
        The transported field and its ``phi``-derivative at fixed radius.
    """
    fp = footpoints(sf) if fp is None else fp
    K = fp.K
    val = np.asarray(data(K), dtype=float)
    d = (np.asarray(data(K + FD_STEP)) - np.asarray(data(K - FD_STEP))) / (2 * FD_STEP)
    return val, d * fp.dK


def advection_residual(field: np.ndarray, sf: StreamFunctionField) -> np.ndarray:
    """Discrete advection of ``field`` by the flux ``(d_eta w, -d_xi w)``.

    This is the Jacobian ``{w, F}`` in computational variables; it
    vanishes for any function of ``w``.
    """
    grid = sf.grid
    w_xi = np.gradient(sf.w, grid.h_xi, axis=0, edge_order=2)
    w_eta = np.gradient(sf.w, grid.h_eta, axis=1, edge_order=2)
    F_xi = np.gradient(field, grid.h_xi, axis=0, edge_order=2)
    F_eta = np.gradient(field, grid.h_eta, axis=1, edge_order=2)
    return w_eta * F_xi - w_xi * F_eta

"""Finite-volume solvers for the two linear elliptic problems.

Both operators are written as a two-dimensional divergence in the
meridian coordinates ``(r, phi)`` after multiplying by ``r^2 sin(phi)``,
then pulled back to the rectangle.  With ``D = d(xi, eta)/d(r, phi)`` and
``s = det d(r, phi)/d(xi, eta)`` a diagonal tensor ``diag(k1, k2)`` becomes

    K~ = s D K D^T = [[(k1 + c^2 k2)/s, -c k2], [-c k2, s k2]].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EllipticityLost, NonConvergence, SingularSystem
from .gas import GasModel, flux_jacobian
from .geometry import FrontLike, MappedGrid, Metric, _front_eval

DIRECT_LIMIT = 1_000_000
LINEAR_RTOL = 1e-10


# -- coefficients -----------------------------------------------------------------

@dataclass
class CoefficientField:
    """Background coefficient matrix in spherical components.

    For a radial background the matrix is ``diag(a_rr, a_pp, a_pp)``.
    """

    r: np.ndarray
    a_rr: np.ndarray
    a_pp: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(min(self.a_rr.min(), self.a_pp.min()))

    @property
    def max_eigenvalue(self) -> float:
        return float(max(self.a_rr.max(), self.a_pp.max()))


def background_coefficients(u, gas: GasModel):
    """``(a_rr, a_pp)`` of ``dA/dq`` at the radial velocity ``u``."""
    u = np.asarray(u, dtype=float)
    q = np.stack([u, np.zeros_like(u), np.zeros_like(u)], axis=-1)
    a = flux_jacobian(q, gas)
    return a[..., 0, 0], a[..., 1, 1]


def assemble_aij(profile, grid: MappedGrid, front: FrontLike | None = None) -> CoefficientField:
    """Nodal background coefficients on the physical points of the grid.

    Raises
    ------
    EllipticityLost
        If any nodal matrix has a non-positive eigenvalue.
    """
    front = grid.r_sh if front is None else front
    r = grid.physical_r(front)
    a_rr, a_pp = background_coefficients(profile.velocity(r, "+"), profile.gas)
    cf = CoefficientField(r, a_rr, a_pp)
    if cf.min_eigenvalue <= 0.0:
        raise EllipticityLost(f"min eigenvalue {cf.min_eigenvalue:.3e} <= 0")
    return cf


def mapped_tensor(k1, k2, m: Metric):
    """Computational tensor entries ``(K11, K12, K22)``."""
    return (k1 + m.c**2 * k2) / m.s, -m.c * k2, m.s * k2


def flux_operator(grid: MappedGrid, front: FrontLike, k1: Callable, k2: Callable,
                  parity: tuple) -> sp.csr_matrix:
    """Net outflow through interior faces of ``K~ grad u``.

    ``k1(metric)`` and ``k2(metric)`` return the physical diagonal tensor
    at sample points.  Boundary faces in ``xi`` carry no flux here; wall
    and axis faces use the ghost reflection given by ``parity``.
    """
    ops = grid.operators(*parity)
    DE, DN = grid.divergence
    me, mn = grid.east_metric(front), grid.north_metric(front)
    K11e, K12e, _ = mapped_tensor(k1(me), k2(me), me)
    _, K21n, K22n = mapped_tensor(k1(mn), k2(mn), mn)
    east = sp.diags(K11e.ravel()) @ ops["Ex"] + sp.diags(K12e.ravel()) @ ops["Ee"]
    north = sp.diags(K21n.ravel()) @ ops["Nx"] + sp.diags(K22n.ravel()) @ ops["Ne"]
    return (DE @ east + DN @ north).tocsr()


def linear_solve(A, b, what: str = "system", dump: Optional[str] = None) -> np.ndarray:
    """Direct sparse solve, or ILU-preconditioned GMRES for huge systems."""
    A = sp.csc_matrix(A)
    if dump:
        scipy.io.mmwrite(dump, A)
    if A.shape[0] <= DIRECT_LIMIT:
        try:
            x = spla.splu(A).solve(b)
        except RuntimeError as exc:
            raise SingularSystem(f"{what}: {exc}") from exc
    else:  # pragma: no cover - exercised only on very large grids
        ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, M=M, rtol=1e-13, restart=200, maxiter=2000)
        if info != 0:
            raise NonConvergence(f"{what}: GMRES info={info}")
    if not np.all(np.isfinite(x)):
        raise SingularSystem(f"{what}: non-finite solution")
    res = np.linalg.norm(A @ x - b)
    scale = max(np.linalg.norm(b), np.abs(A).max() * np.linalg.norm(x), 1e-300)
    if res > LINEAR_RTOL * scale:
        raise NonConvergence(f"{what}: residual {res:.3e} above tolerance")
    return x


# -- conormal (potential) problem ---------------------------------------------------

def _shock_area(grid: MappedGrid, front: FrontLike):
    """``f sin(phi) sqrt(f^2 + f'^2)``: shock face measure per unit eta."""
    f = _front_eval(front, grid.eta)
    fp = _front_eval(front, grid.eta, 1)
    return f * np.sin(grid.eta) * np.sqrt(f * f + fp * fp)


@dataclass
class ConormalProblem:
    """``div(a grad chi) = source`` with conormal data on every boundary.

    Boundary data are outward conormal derivatives ``(a grad chi).nu``:
    ``g_shock`` per ``eta`` node, ``g_wall`` per ``xi`` node, ``g_exit`` per
    ``eta`` node.  The anchor fixes the mean of ``chi`` on the shock row.
    """

    front: FrontLike
    a_rr: Callable
    a_pp: Callable
    source: np.ndarray
    g_shock: np.ndarray
    g_wall: np.ndarray
    g_exit: np.ndarray
    anchor: Optional[float] = 0.0

    @classmethod
    def from_profile(cls, profile, grid: MappedGrid, front=None, **kw):
        front = grid.r_sh if front is None else front
        gas = profile.gas

        def arr(r):
            return background_coefficients(profile.velocity(r, "+"), gas)[0]

        def app(r):
            return background_coefficients(profile.velocity(r, "+"), gas)[1]

        zeros = dict(source=np.zeros(grid.shape), g_shock=np.zeros(grid.n_phi),
                     g_wall=np.zeros(grid.n_r), g_exit=np.zeros(grid.n_phi))
        zeros.update(kw)
        return cls(front, arr, app, **zeros)

    def tensor(self):
        k1 = lambda m: m.r**2 * m.sin * self.a_rr(m.r)  # noqa: E731
        k2 = lambda m: m.sin * self.a_pp(m.r)  # noqa: E731
        return k1, k2


def conormal_operator(problem: ConormalProblem, grid: MappedGrid) -> sp.csr_matrix:
    k1, k2 = problem.tensor()
    return flux_operator(grid, problem.front, k1, k2, (1, 1))


def conormal_rhs(problem: ConormalProblem, grid: MappedGrid) -> np.ndarray:
    """Source minus known boundary outflow, per cell."""
    m = grid.node_metric(problem.front)
    b = (m.s * m.r**2 * m.sin * problem.source * grid.volumes).copy()
    b[0, :] -= _shock_area(grid, problem.front) * problem.g_shock * grid.h_eta
    b[-1, :] -= grid.r_ex**2 * np.sin(grid.eta) * problem.g_exit * grid.h_eta
    mw = grid.metric(problem.front, grid.xi, np.full(grid.n_r, grid.phi0))
    b[:, -1] -= mw.s * mw.r * mw.sin * problem.g_wall * grid.widths
    return b.ravel()


def solve_conormal(problem: ConormalProblem, grid: MappedGrid, dump: Optional[str] = None):
    """Solve the all-conormal problem with a mean anchor on the shock row.

    A bordered system ``[[M, 1], [w^T, 0]]`` absorbs the discrete
    compatibility defect into a scalar multiplier, which is returned.

    Returns
    -------
    chi : ndarray, shape (n_r, n_phi)
    defect : float
        Multiplier; zero when the data are exactly compatible.
    """
    if problem.anchor is None:
        raise SingularSystem("conormal problem needs an anchor")
    M = conormal_operator(problem, grid)
    b = conormal_rhs(problem, grid)
    N = grid.size
    w = np.zeros(N)
    w[: grid.n_phi] = 1.0 / grid.n_phi
    ones = np.ones((N, 1))
    A = sp.bmat([[M, sp.csr_matrix(ones)], [sp.csr_matrix(w[None, :]), None]], format="csc")
    rhs = np.concatenate([b, [problem.anchor]])
    x = linear_solve(A, rhs, "conormal", dump)
    return x[:N].reshape(grid.shape), float(x[N])


# -- stream problem ------------------------------------------------------------------

@dataclass
class StreamProblem:
    """``-(Lap - 1/(r sin)^2) psi = G`` with a shock Robin condition.

    On the shock ``-grad psi . n + mu psi = data`` with ``n`` the unit
    normal pointing downstream; ``psi = 0`` on wall, axis and exit.
    """

    front: FrontLike
    G: np.ndarray
    mu: np.ndarray
    data: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.data is None:
            self.data = np.zeros_like(np.asarray(self.mu, dtype=float))


def _psi_tensor():
    return (lambda m: m.r**2 * m.sin), (lambda m: m.sin)


def stream_system(problem: StreamProblem, grid: MappedGrid):
    """Matrix and right-hand side with exit unknowns eliminated (kept as identity)."""
    k1, k2 = _psi_tensor()
    M = flux_operator(grid, problem.front, k1, k2, (-1, -1))
    m = grid.node_metric(problem.front)
    react = (m.s / m.sin * grid.volumes).ravel()
    area = _shock_area(grid, problem.front)
    beta = area * np.asarray(problem.mu) * grid.h_eta
    gamma = -area * np.asarray(problem.data) * grid.h_eta
    diag = react.copy()
    diag[: grid.n_phi] += beta
    A = (-M + sp.diags(diag)).tolil()
    b = (m.s * m.r**2 * m.sin * problem.G * grid.volumes).ravel()
    b[: grid.n_phi] -= gamma
    ex = np.arange((grid.n_r - 1) * grid.n_phi, grid.size)
    A = A.tocsc()
    keep = np.ones(grid.size)
    keep[ex] = 0.0
    K = sp.diags(keep)
    A = (K @ A @ K + sp.diags(1.0 - keep)).tocsr()
    b[ex] = 0.0
    return A, b


def solve_stream(problem: StreamProblem, grid: MappedGrid, dump: Optional[str] = None) -> np.ndarray:
    """Solve the stream problem; returns ``psi`` of shape ``(n_r, n_phi)``."""
    A, b = stream_system(problem, grid)
    return linear_solve(A, b, "stream", dump).reshape(grid.shape)

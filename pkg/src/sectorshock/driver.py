"""Nonlinear solves: fixed exit flux, exit-pressure inversion and sweeps.

Unknowns live on the mapped grid: the potential deviation
``chi = Phi - phi0+(r)``, the stream component ``psi``, entropy ``S``,
swirl ``Lambda`` and the front values.  One Picard sweep solves for
``psi``, transports the swirl, takes damped Newton steps on the coupled
``(chi, f)`` system and finally transports the entropy.

The ``(chi, f)`` residual is written in perturbation form: the exact
background flux is subtracted face by face, so the radial background is
an exact discrete fixed point.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .background import RadialProfile
from .elliptic import (StreamProblem, background_coefficients, flux_operator,
                       linear_solve, solve_stream)
from .errors import (AdmissibilityError, FrontOutOfRangeError, InvalidInputError,
                     MaxIterations, PressureOutOfRangeError, ReversedFlowError,
                     StagnationError)
from .gas import bernoulli, density_closure, entropy_factor, flux_A, source_G, speed2
from .geometry import MappedGrid, ShockFront, weighted_norm
from .shockfront import (FRONT_BAND, apply_front_step, frame, g1_data, mu0,
                         rh_residuals, robin_coefficients, shock_data, shock_data_at)
from .transport import build_stream_function, footpoints, transport_scalar
from .upstream import PerturbationSpec, UpstreamFlow

FD_FRONT = 1e-7


@dataclass
class SolverConfig:
    """Grid sizes, iteration caps, tolerances and damping.

    Attributes
    ----------
    n_r, n_phi : int
        Nodes across the downstream region and cells across the sector.
    max_outer, max_picard, max_newton : int
        Caps on pressure updates, Picard sweeps per solve and Newton steps
        per sweep.
    tol_front, tol_field, tol_pressure : float
        Stopping thresholds on front updates, field updates (sup norms) and
        the relative exit-pressure mismatch.
    omega : float
        Damping of the ``(chi, f)`` Newton steps.
    alpha : float
        Hoelder exponent of the weighted diagnostic norm.
    sigma_max : float
        Largest perturbation amplitude accepted.
    """

    n_r: int = 65
    n_phi: int = 33
    max_outer: int = 30
    max_picard: int = 80
    max_newton: int = 4
    tol_front: float = 1e-10
    tol_field: float = 1e-9
    tol_pressure: float = 1e-9
    omega: float = 0.7
    alpha: float = 0.6
    sigma_max: float = 5e-2

    def __post_init__(self):
        for name in ("tol_front", "tol_field", "tol_pressure"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("max_outer", "max_picard", "max_newton"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1")
        if not 0.0 < self.omega <= 1.0:
            raise InvalidInputError("omega must lie in (0, 1]")
        if self.n_r < 5 or self.n_phi < 4:
            raise InvalidInputError("grid too coarse")


@dataclass
class SolveReport:
    """Serializable summary of a solve."""

    converged: bool = False
    sigma: float = 0.0
    iterations: dict = field(default_factory=lambda: {"outer": 0, "picard": 0, "newton": 0})
    omega_halvings: int = 0
    deviations: dict = field(default_factory=dict)
    rh_residuals: dict = field(default_factory=dict)
    bernoulli_max_dev: float = float("nan")
    continuity_residual: float = float("nan")
    mach: dict = field(default_factory=dict)
    stability_ratio: float = float("nan")
    exit_pressure_residual: float = float("nan")
    v_ex_deviation: float = float("nan")
    swirl_over_sin: float = float("nan")
    weighted_deviation: float = float("nan")
    mu0: float = float("nan")
    grid: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    front_history: list = field(default_factory=list)
    elapsed: float = 0.0
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kw)


@dataclass
class FlowState:
    """Mapped-grid unknowns of one solve."""

    front: ShockFront
    chi: np.ndarray
    psi: np.ndarray
    S: np.ndarray
    dS: np.ndarray
    lam: np.ndarray
    dlam: np.ndarray
    v: np.ndarray

    def copy(self) -> "FlowState":
        return FlowState(ShockFront(self.front.phi, self.front.values, self.front.phi0),
                         self.chi.copy(), self.psi.copy(), self.S.copy(), self.dS.copy(),
                         self.lam.copy(), self.dlam.copy(), self.v.copy())


@dataclass
class FlowFields:
    """Primitive fields at the physical positions of the grid nodes."""

    r: np.ndarray
    phi: np.ndarray
    rho: np.ndarray
    vel: np.ndarray
    p: np.ndarray
    S: np.ndarray
    lam: np.ndarray
    chi: np.ndarray
    psi: np.ndarray

    @property
    def mach(self) -> np.ndarray:
        return np.sqrt(speed2(self.vel)) / np.sqrt(self._gamma * self.p / self.rho)

    _gamma: float = 1.4

    def rows(self):
        m = self.mach
        for i in range(self.r.shape[0]):
            for j in range(self.r.shape[1]):
                u = self.vel[i, j]
                yield (i, j, self.r[i, j], self.phi[i, j], self.rho[i, j], u[0], u[1], u[2],
                       self.p[i, j], m[i, j], self.S[i, j], self.lam[i, j], self.chi[i, j],
                       self.psi[i, j])

    CSV_HEADER = ("i", "j", "r", "phi", "rho", "u_r", "u_phi", "u_theta", "p", "mach",
                  "S", "Lambda", "chi", "psi")


# -- discrete operators --------------------------------------------------------------

class Discretization:
    """Face fluxes, residual and chord Jacobian on a fixed mapped grid."""

    def __init__(self, profile: RadialProfile, upstream: UpstreamFlow, grid: MappedGrid):
        self.profile, self.upstream, self.grid = profile, upstream, grid
        self.gas = profile.gas
        self.m_A = profile.flux_A("+")
        self.v_c = self.m_A / grid.r_ex**2
        self.even = grid.operators(1, 1)
        self.odd = grid.operators(-1, -1)

    # velocity at sample points from mapped derivatives
    def _velocity(self, m, gx, ge, px, pe, pv, lam):
        """Physical velocity from mapped derivatives of ``chi`` and ``psi``."""
        r, s, c, sn = m.r, m.s, m.c, m.sin
        safe = np.where(sn > 0, sn, 1.0)
        cot = m.cos / safe
        tr = (pe - (c / s) * px + cot * pv) / r
        tp = -pv / r - px / s
        qr = self.profile.velocity(r, "+") + gx / s + tr
        qp = (ge - (c / s) * gx) / r + tp
        qt = lam / (r * safe)
        return np.stack([qr, qp, qt], axis=-1)

    def face_fluxes(self, st: FlowState):
        """Perturbation fluxes ``(east, north)`` per unit face coordinate."""
        g, E, O = self.grid, self.even, self.odd
        nr, nt = g.shape
        chi, psi, lam = st.chi.ravel(), st.psi.ravel(), st.lam.ravel()
        me = g.east_metric(st.front)
        sh = (nr - 1, nt)
        q = self._velocity(me, (E["Ex"] @ chi).reshape(sh), (E["Ee"] @ chi).reshape(sh),
                           (O["Ex"] @ psi).reshape(sh), (O["Ee"] @ psi).reshape(sh),
                           (O["Ev"] @ psi).reshape(sh), (E["Ev"] @ lam).reshape(sh))
        A = flux_A(q, 0.0, self.gas)
        east = me.r**2 * me.sin * (A[..., 0] - self.m_A / me.r**2) - me.c * me.r * me.sin * A[..., 1]
        mn = g.north_metric(st.front)
        sh = (nr, nt + 1)
        inner = np.zeros(sh, dtype=bool)
        inner[:, 1:-1] = True
        q = self._velocity(mn, (E["Nx"] @ chi).reshape(sh), (E["Ne"] @ chi).reshape(sh),
                           (O["Nx"] @ psi).reshape(sh), (O["Ne"] @ psi).reshape(sh),
                           (O["Nv"] @ psi).reshape(sh), (E["Nv"] @ lam).reshape(sh))
        north = np.zeros(sh)
        Ai = flux_A(q[inner], 0.0, self.gas)
        north[inner] = (mn.s * mn.r * mn.sin)[inner] * Ai[:, 1]
        return east, north

    def shock_flux(self, front: ShockFront, f=None):
        f = front.values if f is None else f
        sd = shock_data_at(f, front.deriv(front.phi), front.phi, self.upstream)
        return sd.flux_A

    def residual(self, st: FlowState):
        """Cell balances (outflow) and potential jumps at the front."""
        g = self.grid
        DE, DN = g.divergence
        east, north = self.face_fluxes(st)
        R = (DE @ east.ravel() + DN @ north.ravel()).reshape(g.shape)
        sinj = np.sin(g.eta)
        R[0] -= g.h_eta * (self.shock_flux(st.front) - self.m_A * sinj)
        R[-1] += g.h_eta * g.r_ex**2 * sinj * (st.v - self.v_c)
        f = st.front.values
        D = (self.upstream.potential(f, g.eta) - self.profile.potential(f, "+") - st.chi[0])
        return R, D

    def jacobian(self, st: FlowState):
        g, pr = self.grid, self.profile
        gas = self.gas

        def k1(m):
            return m.r**2 * m.sin * background_coefficients(pr.velocity(m.r, "+"), gas)[0]

        def k2(m):
            return m.sin * background_coefficients(pr.velocity(m.r, "+"), gas)[1]

        M = flux_operator(g, st.front, k1, k2, (1, 1))
        nt, N = g.n_phi, g.size
        f = st.front.values
        dq = (self.shock_flux(st.front, f + FD_FRONT) - self.shock_flux(st.front, f - FD_FRONT)) / (2 * FD_FRONT)
        C = sp.csr_matrix((-g.h_eta * dq, (np.arange(nt), np.arange(nt))), shape=(N, nt))
        Dc = sp.csr_matrix((-np.ones(nt), (np.arange(nt), np.arange(nt))), shape=(nt, N))
        Df = sp.diags(self.upstream.dr_potential(f, g.eta) - pr.velocity(f, "+"))
        return sp.bmat([[M, C], [Dc, Df]], format="csc")

    # nodal quantities
    def node_velocity(self, st: FlowState):
        g, E, O = self.grid, self.even, self.odd
        m = g.node_metric(st.front)
        chi, psi = st.chi.ravel(), st.psi.ravel()
        sh = g.shape
        return self._velocity(m, (E["Cx"] @ chi).reshape(sh), (E["Ce"] @ chi).reshape(sh),
                              (O["Cx"] @ psi).reshape(sh), (O["Ce"] @ psi).reshape(sh),
                              st.psi, st.lam), m

    def stream_function(self, st: FlowState):
        g = self.grid
        east, _ = self.face_fluxes(st)
        sinj = np.sin(g.eta)
        total = east + self.m_A * sinj
        return build_stream_function(g, st.front, total, self.shock_flux(st.front),
                                     g.r_ex**2 * sinj * st.v)

    def exit_pressure(self, st: FlowState):
        q, _ = self.node_velocity(st)
        rho = density_closure(st.S[-1], q[-1], self.gas)
        return st.S[-1] * rho**self.gas.gamma


# -- solves -------------------------------------------------------------------------

def initial_state(profile: RadialProfile, grid: MappedGrid, front_value: Optional[float] = None,
                  v=None) -> FlowState:
    """Background state, optionally with a shifted flat front."""
    fv = profile.r_sh if front_value is None else front_value
    front = ShockFront.constant(grid.eta, fv, grid.phi0)
    z = np.zeros(grid.shape)
    m_A = profile.flux_A("+")
    v = np.full(grid.n_phi, m_A / grid.r_ex**2) if v is None else np.asarray(v, dtype=float)
    return FlowState(front, z.copy(), z.copy(), np.full(grid.shape, profile.S_plus), z.copy(),
                     z.copy(), z.copy(), v)


def _sup(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _robin_safe_front(front: ShockFront, delta, r_sh: float, omega: float,
                      max_halvings: int = 4) -> ShockFront:
    """Front step, halved while the stream Robin coefficient is not negative."""
    for k in range(max_halvings + 1):
        new, _ = apply_front_step(front, delta, r_sh, omega * 0.5**k, FRONT_BAND)
        mu, _ = robin_coefficients(new.values, new.deriv(new.phi), new.phi, 0.0, 0.0, 0.0)
        if np.all(mu < 0):
            return new
    raise AdmissibilityError("front slope makes the stream Robin coefficient non-negative")


def _newton(dz: Discretization, st: FlowState, cfg: SolverConfig, omega: float):
    """Damped chord-Newton steps on ``(chi, f)``; returns the last update size."""
    g = dz.grid
    N = g.size
    step = 0.0
    for _ in range(cfg.max_newton):
        R, D = dz.residual(st)
        J = dz.jacobian(st)
        dx = linear_solve(J, -np.concatenate([R.ravel(), D]), "newton")
        dchi = dx[:N].reshape(g.shape)
        st.chi += omega * dchi
        st.front = _robin_safe_front(st.front, dx[N:], dz.profile.r_sh, omega)
        step = max(_sup(dchi), _sup(dx[N:])) * omega
        dz.newton_steps += 1
        if step < 0.1 * cfg.tol_front:
            break
    return step


def _picard_sweep(dz: Discretization, st: FlowState, cfg: SolverConfig, omega: float):
    g, gas, up = dz.grid, dz.gas, dz.upstream
    old = st.copy()
    # stream component
    q, m = dz.node_velocity(st)
    if np.any(q[..., 0] <= 0):
        raise StagnationError("radial velocity must stay positive")
    G = source_G(m.r, g.eta[None, :], st.S, st.lam, st.dS, st.dlam, q, gas)
    G[-1] = 0.0
    sd = shock_data(st.front, up)
    st.psi = solve_stream(StreamProblem(st.front, G, sd.mu, sd.robin), g)
    # swirl
    if up.spec.swirl_free:
        st.lam[:] = 0.0
        st.dlam[:] = 0.0
    else:
        fp = footpoints(dz.stream_function(st))
        st.lam, st.dlam = transport_scalar(up.swirl, dz.stream_function(st), fp)
    # potential and front
    _newton(dz, st, cfg, omega)
    # entropy
    sf = dz.stream_function(st)
    fp = footpoints(sf)
    front = st.front

    def s_sh(phi):
        return shock_data(front, up, np.clip(phi, 1e-12, g.phi0 - 1e-12)).S_sh

    st.S, st.dS = transport_scalar(s_sh, sf, fp)
    return {
        "front": _sup(st.front.values - old.front.values),
        "chi": _sup(st.chi - old.chi),
        "psi": _sup(st.psi - old.psi),
        "S": _sup(st.S - old.S),
        "lam": _sup(st.lam - old.lam),
    }


def solve_fixed_exit_velocity(profile: RadialProfile, perturbation: PerturbationSpec, v_ex,
                              config: SolverConfig | None = None,
                              state: FlowState | None = None, grid: MappedGrid | None = None):
    """Picard iteration at a prescribed exit flux ``v_ex`` (per exit node).

    Returns
    -------
    state : FlowState
    report : SolveReport

    Raises
    ------
    MaxIterations
        If the sweep does not settle; ``report`` holds the best iterate.
    """
    cfg = config or SolverConfig()
    _check_sigma(perturbation, cfg)
    grid = grid or MappedGrid(profile.r_sh, profile.geom.r_ex, profile.geom.phi0, cfg.n_r, cfg.n_phi)
    up = UpstreamFlow(profile, perturbation)
    dz = Discretization(profile, up, grid)
    st = state.copy() if state is not None else initial_state(profile, grid)
    st.v = np.asarray(v_ex, dtype=float).copy()
    report = SolveReport(sigma=perturbation.sigma)
    _picard(dz, st, cfg, report)
    _diagnostics(dz, st, cfg, report)
    return st, report


def _picard(dz: Discretization, st: FlowState, cfg: SolverConfig, report: SolveReport):
    omega = cfg.omega
    dz.newton_steps = 0
    prev = math.inf
    best = None
    for it in range(1, cfg.max_picard + 1):
        upd = _picard_sweep(dz, st, cfg, omega)
        size = max(upd.values())
        report.history.append({"sweep": report.iterations["picard"] + 1, **upd,
                               "rh": _rh_max(dz, st)})
        report.front_history.append(st.front.values.tolist())
        report.iterations["picard"] += 1
        if best is None or size < best[0]:
            best = (size, st.copy())
        done = (upd["front"] < cfg.tol_front and max(upd["chi"], upd["psi"], upd["S"], upd["lam"])
                < cfg.tol_field)
        if done:
            report.iterations["newton"] += dz.newton_steps
            return
        if it > 3 and size > prev and omega > 0.1:
            omega *= 0.5
            report.omega_halvings += 1
        prev = size
    report.iterations["newton"] += dz.newton_steps
    report.message = f"Picard sweep did not settle (last update {size:.3e})"
    _copy_into(st, best[1])
    raise MaxIterations(report.message, report=report)


def _copy_into(dst: FlowState, src: FlowState):
    for k in ("front", "chi", "psi", "S", "dS", "lam", "dlam", "v"):
        setattr(dst, k, getattr(src, k))


def _check_sigma(pert: PerturbationSpec, cfg: SolverConfig):
    if pert.sigma > cfg.sigma_max:
        raise InvalidInputError(f"sigma {pert.sigma} exceeds the admissible {cfg.sigma_max}")


def mean_mode_slope(profile: RadialProfile, dr: float = 1e-4) -> float:
    """``d p_exit / d v_c`` along the family of radial solutions."""
    from .background import profile_for_shock

    vals = []
    for r in (profile.r_sh - dr, profile.r_sh + dr):
        p = profile_for_shock(profile.geom, profile.entrance, r, profile.gas.gamma)
        vals.append((p.exit_pressure(), p.flux_A("+") / profile.geom.r_ex**2))
    return (vals[1][0] - vals[0][0]) / (vals[1][1] - vals[0][1])


def exit_slope(profile: RadialProfile) -> float:
    """Local ``dp/dv`` at the background exit state.

    ``b1 = P2 a1`` with ``a1 = -gamma H^(1/(g-1)) u/((g-1) k)``,
    ``k = H^((2-g)/(g-1)) (g+1)(K0 - u^2)/(2(g-1))`` and
    ``P2 = (g-1)/(gamma E(S))`` where ``E`` is the entropy factor.
    """
    gas = profile.gas
    g = gas.gamma
    u = float(profile.velocity(profile.geom.r_ex, "+"))
    H = gas.b0 - 0.5 * u * u
    k = H ** ((2 - g) / (g - 1)) * (g + 1) * (gas.k0 - u * u) / (2 * (g - 1))
    a1 = -g * H ** (1 / (g - 1)) * u / ((g - 1) * k)
    P2 = (g - 1) / (g * float(entropy_factor(profile.S_plus, gas)))
    return P2 * a1


def solve_for_exit_pressure(profile: RadialProfile, perturbation: PerturbationSpec,
                            p_ex=None, config: SolverConfig | None = None,
                            front_value: Optional[float] = None):
    """Match a prescribed exit pressure by updating the exit flux.

    Parameters
    ----------
    p_ex : array_like or callable, optional
        Target pressure at the exit nodes, or a function of ``phi``;
        defaults to the perturbation's exit pressure.
    front_value : float, optional
        Initial flat front (defaults to ``r_sh``).

    Returns
    -------
    state : FlowState
    fields : FlowFields
    report : SolveReport
    """
    t0 = time.perf_counter()
    cfg = config or SolverConfig()
    _check_sigma(perturbation, cfg)
    geom = profile.geom
    grid = MappedGrid(profile.r_sh, geom.r_ex, geom.phi0, cfg.n_r, cfg.n_phi)
    up = UpstreamFlow(profile, perturbation)
    if p_ex is None:
        target = up.exit_pressure(grid.eta)
    elif callable(p_ex):
        target = np.asarray(p_ex(grid.eta), dtype=float)
    else:
        target = np.broadcast_to(np.asarray(p_ex, dtype=float), (grid.n_phi,)).copy()
    _check_pressure(profile, target)
    dz = Discretization(profile, up, grid)
    st = initial_state(profile, grid, front_value)
    report = SolveReport(sigma=perturbation.sigma)
    b1 = exit_slope(profile)
    beta = mean_mode_slope(profile)
    w = np.sin(grid.eta) / np.sin(grid.eta).sum()
    pscale = float(np.max(np.abs(target)))
    # inverse of the model Jacobian b1 (I - P) + beta P, P the weighted mean
    P = np.outer(np.ones(grid.n_phi), w)
    H = (np.eye(grid.n_phi) - P) / b1 + P / beta
    _picard(dz, st, cfg, report)
    e = dz.exit_pressure(st) - target
    for outer in range(1, cfg.max_outer + 1):
        report.iterations["outer"] = outer
        report.exit_pressure_residual = _sup(e) / pscale
        report.history.append({"outer": outer, "pressure": report.exit_pressure_residual})
        if report.exit_pressure_residual < cfg.tol_pressure:
            break
        v_old = st.v.copy()
        st = _pressure_step(dz, st, -H @ e, cfg, report)
        e_new = dz.exit_pressure(st) - target
        # Broyden update of the inverse Jacobian
        ds, dy = st.v - v_old, e_new - e
        Hy = H @ dy
        den = float(ds @ Hy)
        if abs(den) > 1e-300:
            H += np.outer(ds - Hy, ds @ H) / den
        e = e_new
    else:
        report.message = "exit-pressure iteration did not converge"
        _diagnostics(dz, st, cfg, report)
        raise MaxIterations(report.message, report=report)
    _diagnostics(dz, st, cfg, report)
    report.elapsed = time.perf_counter() - t0
    return st, recover_primitives(dz, st), report


def _pressure_step(dz: Discretization, st: FlowState, dv, cfg: SolverConfig,
                   report: SolveReport, max_halvings: int = 6) -> FlowState:
    """Apply an exit-flux update, halving it while the inner solve fails."""
    scale = 1.0
    for _ in range(max_halvings + 1):
        trial = st.copy()
        trial.v = st.v + scale * dv
        if np.all(trial.v > 0):
            try:
                _picard(dz, trial, cfg, report)
                return trial
            except (MaxIterations, ReversedFlowError, StagnationError,
                    FrontOutOfRangeError, AdmissibilityError):
                pass
        scale *= 0.5
        report.history.append({"exit_step_halved": scale})
    raise MaxIterations("exit-flux update could not be stabilised", report=report)


def _check_pressure(profile: RadialProfile, target):
    from .background import exit_pressure_bounds

    lo, hi = exit_pressure_bounds(profile.geom, profile.entrance, profile.gas.gamma)
    if np.any(target <= lo) or np.any(target >= hi):
        raise PressureOutOfRangeError(float(np.mean(target)), lo, hi)


# -- recovery and diagnostics ------------------------------------------------------

def recover_primitives(dz: Discretization, st: FlowState) -> FlowFields:
    """Density, velocity and pressure at the grid nodes."""
    q, m = dz.node_velocity(st)
    rho = density_closure(st.S, q, dz.gas)
    p = st.S * rho**dz.gas.gamma
    ff = FlowFields(m.r, np.broadcast_to(dz.grid.eta, m.r.shape).copy(), rho, q, p, st.S,
                    st.lam, st.chi, st.psi)
    ff._gamma = dz.gas.gamma
    return ff


def _front_rh(sd, ff: FlowFields, gas) -> dict:
    n, tau = frame(sd.f, sd.fp)
    plus = (ff.rho[0], ff.vel[0], ff.p[0])
    return rh_residuals(n, tau, (sd.rho_m, sd.vel_m, sd.p_m), plus, gas)


def _rh_max(dz: Discretization, st: FlowState) -> float:
    """Largest jump-relation residual at the current iterate."""
    res = _front_rh(shock_data(st.front, dz.upstream), recover_primitives(dz, st), dz.gas)
    return float(max(res[k] for k in ("mass", "momentum", "energy", "tangential")))


def _diagnostics(dz: Discretization, st: FlowState, cfg: SolverConfig, report: SolveReport):
    g, gas, pr, up = dz.grid, dz.gas, dz.profile, dz.upstream
    ff = recover_primitives(dz, st)
    sd = shock_data(st.front, up)
    report.rh_residuals = _front_rh(sd, ff, gas)
    report.bernoulli_max_dev = float(np.max(np.abs(bernoulli(ff.rho, ff.vel, ff.p, gas) - gas.b0)) / gas.b0)
    R, D = dz.residual(st)
    report.continuity_residual = float(np.max(np.abs(R)) / (dz.m_A * g.h_xi * g.h_eta))
    report.rh_residuals["potential_jump"] = _sup(D)
    mach = ff.mach
    up_mach = up.mach(sd.f, g.eta)
    report.mach = {"downstream_max": float(mach.max()), "downstream_min": float(mach.min()),
                   "upstream_trace_min": float(up_mach.min())}
    dev = {
        "front": _sup(st.front.values - pr.r_sh),
        "entropy": _sup(st.S - pr.S_plus),
        "swirl": _sup(st.lam / np.sin(g.eta)),
        "chi": _sup(st.chi),
        "psi": _sup(st.psi),
    }
    dev["total"] = float(sum(dev.values()))
    report.deviations = dev
    report.swirl_over_sin = dev["swirl"]
    report.v_ex_deviation = _sup(st.v - dz.v_c) / dz.v_c
    if report.sigma > 0:
        report.stability_ratio = dev["total"] / report.sigma
    report.weighted_deviation = float(weighted_norm(st.chi, g, alpha=cfg.alpha))
    report.mu0 = mu0(pr)
    report.grid = {"n_r": g.n_r, "n_phi": g.n_phi, "h": g.h}
    report.converged = not report.message


# -- sweeps ------------------------------------------------------------------------

@dataclass
class SweepRow:
    sigma: float
    deviation: float
    ratio: float
    converged: bool
    message: str = ""


def stability_sweep(profile: RadialProfile, family: PerturbationSpec, sigmas,
                    config: SolverConfig | None = None, workers: int = 1,
                    spread_limit: float = 0.15):
    """Solve along ``sigma`` and tabulate deviation over sigma.

    Returns
    -------
    rows : list of SweepRow
        Sorted by ``sigma``.
    spread : float
        ``(max - min)/mean`` of the ratios over nonzero ``sigma``.
    linear : bool
        Whether the spread stays below ``spread_limit``.
    """
    cfg = config or SolverConfig()

    def one(sig):
        if sig == 0.0:
            return SweepRow(0.0, 0.0, float("nan"), True)
        try:
            _, _, rep = solve_for_exit_pressure(profile, family.scaled(sig), None, cfg)
            return SweepRow(sig, rep.deviations["total"], rep.stability_ratio, True)
        except MaxIterations as exc:
            return SweepRow(sig, float("nan"), float("nan"), False, str(exc))

    sig = sorted(float(s) for s in sigmas)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(one, sig))
    else:
        rows = [one(s) for s in sig]
    ratios = np.array([r.ratio for r in rows if r.sigma > 0 and r.converged])
    spread = float((ratios.max() - ratios.min()) / ratios.mean()) if ratios.size else float("nan")
    return rows, spread, bool(spread < spread_limit)


def g1_diagnostic(dz: Discretization, st: FlowState) -> np.ndarray:
    """Conormal datum implied by the jump at the current front."""
    g, O = dz.grid, dz.odd
    m = g.node_metric(st.front)
    psi = st.psi.ravel()
    z = np.zeros(g.shape)
    q = dz._velocity(m, z, z, (O["Cx"] @ psi).reshape(g.shape), (O["Ce"] @ psi).reshape(g.shape),
                     st.psi, st.lam)
    sd = shock_data(st.front, dz.upstream)
    t0 = q[0, :, 0] - dz.profile.velocity(m.r[0], "+")
    t_normal = t0 * sd.n[:, 0] + q[0, :, 1] * sd.n[:, 1]
    return g1_data(sd, dz.profile, t_normal)


__all__ = ["SolverConfig", "SolveReport", "FlowState", "FlowFields", "Discretization",
           "PerturbationSpec", "UpstreamFlow", "solve_fixed_exit_velocity",
           "solve_for_exit_pressure", "recover_primitives", "stability_sweep",
           "exit_slope", "mean_mode_slope", "initial_state", "g1_diagnostic"]

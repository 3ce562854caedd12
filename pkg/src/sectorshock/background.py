"""Radial transonic flows in a spherical-sector nozzle.

A purely radial flow keeps ``m = r^2 rho u`` and the Bernoulli constant
fixed, so each radius has one supersonic and one subsonic state.  A
normal shock at ``r_sh`` links the two branches.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (ChokedError, InvalidInputError, NotSupersonicError,
                     PressureOutOfRangeError)
from .gas import GasModel, entropy_factor

SUPERSONIC = "supersonic"
SUBSONIC = "subsonic"
N_CHEB = 257
ROOT_RTOL = 1e-13
FRONT_BAND = 0.25


@dataclass(frozen=True)
class NozzleGeom:
    """Sector ``r_en < r < r_ex``, ``0 <= phi < phi0``."""

    r_en: float
    r_ex: float
    phi0: float

    def __post_init__(self):
        if not (0.0 < self.r_en < self.r_ex):
            raise InvalidInputError("need 0 < r_en < r_ex")
        if not (0.0 < self.phi0 < 0.5 * math.pi):
            raise InvalidInputError("need 0 < phi0 < pi/2")


@dataclass(frozen=True)
class EntranceData:
    rho_en: float
    u_en: float
    p_en: float

    def __post_init__(self):
        if min(self.rho_en, self.u_en, self.p_en) <= 0.0:
            raise InvalidInputError("entrance data must be positive")

    def bernoulli(self, gamma: float) -> float:
        return 0.5 * self.u_en**2 + gamma * self.p_en / ((gamma - 1.0) * self.rho_en)

    def entropy(self, gamma: float) -> float:
        return self.p_en / self.rho_en**gamma


def gas_for_entrance(gamma: float, entrance: EntranceData) -> GasModel:
    """Gas model whose Bernoulli constant matches the entrance state."""
    return GasModel(gamma, entrance.bernoulli(gamma))


def _rho_of_u(u, S, gas: GasModel):
    g = gas.gamma
    return ((g - 1.0) * (gas.b0 - 0.5 * u * u) / (g * S)) ** (1.0 / (g - 1.0))


def _flux(u, r, S, gas):
    return r * r * _rho_of_u(u, S, gas) * u


def _polish(u, r, m, S, gas):
    # one Newton step on r^2 rho(u) u = m; d(rho u)/du = rho (1 - u^2/c^2)
    g = gas.gamma
    rho = _rho_of_u(u, S, gas)
    c2 = (g - 1.0) * (gas.b0 - 0.5 * u * u)
    return u - (r * r * rho * u - m) / (r * r * rho * (1.0 - u * u / c2))


def radial_state(r: float, m: float, S: float, branch: str, gas: GasModel):
    """Solve ``m = r^2 rho(u) u`` on one side of the sonic speed.

    Returns
    -------
    tuple of float
        ``(rho, u, p)``.

    Raises
    ------
    ChokedError
        If ``m`` exceeds the largest flux attainable at ``r``.
    """
    ustar = gas.sonic_speed
    if _flux(ustar, r, S, gas) < m:
        raise ChokedError(f"mass flux {m:.6g} exceeds sonic maximum at r={r:.6g}")
    if branch == SUPERSONIC:
        lo, hi = ustar, math.sqrt(2.0 * gas.b0 * (1.0 - 1e-12))
    elif branch == SUBSONIC:
        lo, hi = 1e-12, ustar
    else:
        raise InvalidInputError(f"unknown branch {branch!r}")
    fun = lambda u: _flux(u, r, S, gas) - m  # noqa: E731
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        u = lo
    elif fhi == 0.0:
        u = hi
    else:
        u = brentq(fun, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
        if abs(u - ustar) > 1e-6 * ustar:
            u = _polish(u, r, m, S, gas)
    rho = _rho_of_u(u, S, gas)
    return rho, u, S * rho**gas.gamma


def rh_jump(rho_m: float, u_m: float, p_m: float, gas: GasModel):
    """Normal-shock jump at fixed Bernoulli constant.

    ``u+ = K0/u-``, ``p+ = rho- u-^2 + p- - rho- K0``, ``rho+ = rho- u-/u+``.
    """
    k0 = gas.k0
    if u_m * u_m < k0 * (1.0 - 1e-14):
        raise NotSupersonicError(f"u- = {u_m:.6g} below sonic speed {math.sqrt(k0):.6g}")
    u_p = k0 / u_m
    p_p = rho_m * u_m * u_m + p_m - rho_m * k0
    rho_p = rho_m * u_m / u_p
    return rho_p, u_p, p_p


def chebyshev_nodes(a: float, b: float, n: int = N_CHEB) -> np.ndarray:
    """Chebyshev-Lobatto points on ``[a, b]`` in increasing order."""
    k = np.arange(n)
    x = -np.cos(np.pi * k / (n - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * x


@dataclass
class _Branch:
    S: float
    m: float
    branch: str
    r: np.ndarray
    u: np.ndarray
    spline: CubicSpline = field(repr=False)
    anti: CubicSpline = field(repr=False)
    phi_ref: float = 0.0


def _tabulate(a, b, m, S, branch, gas, r_ref, n):
    r = chebyshev_nodes(a, b, n)
    u = np.array([radial_state(ri, m, S, branch, gas)[1] for ri in r])
    sp = CubicSpline(r, u)
    anti = sp.antiderivative()
    return _Branch(S, m, branch, r, u, sp, anti, float(anti(r_ref)))


class RadialProfile:
    """Background flow with a normal shock at ``r_sh``.

    The supersonic branch is tabulated on ``[r_en, r_ex]`` and the
    subsonic branch on ``[r_lo, r_ex]`` with ``r_lo <= r_sh`` extended
    upstream by up to a quarter when the subsonic branch exists there.
    Off-node values come from a cubic spline polished by one Newton step
    on the mass-flux relation, so ``m`` and ``B0`` hold to round-off at
    every query point.  Potentials vanish at ``r_sh``.
    """

    def __init__(self, geom: NozzleGeom, entrance: EntranceData, r_sh: float,
                 gamma: float, n: int = N_CHEB):
        if not (geom.r_en <= r_sh <= geom.r_ex):
            raise InvalidInputError("r_sh must lie in [r_en, r_ex]")
        self.geom, self.entrance, self.r_sh = geom, entrance, float(r_sh)
        self.gas = gas = gas_for_entrance(gamma, entrance)
        g = gas.gamma
        if entrance.u_en**2 <= g * entrance.p_en / entrance.rho_en:
            raise NotSupersonicError("entrance state must be supersonic")
        self.m = geom.r_en**2 * entrance.rho_en * entrance.u_en
        self.S_minus = entrance.entropy(g)
        self.shock_minus = radial_state(r_sh, self.m, self.S_minus, SUPERSONIC, gas)
        if r_sh == geom.r_en:
            self.shock_minus = (entrance.rho_en, entrance.u_en, entrance.p_en)
        self.shock_plus = rh_jump(*self.shock_minus, gas)
        rp, _, pp = self.shock_plus
        self.S_plus = pp / rp**g
        self._minus = _tabulate(geom.r_en, geom.r_ex, self.m, self.S_minus,
                                SUPERSONIC, gas, r_sh, n)
        r_lo = self._subsonic_floor()
        self.r_lo = r_lo
        self._plus = _tabulate(r_lo, geom.r_ex, self.m, self.S_plus,
                               SUBSONIC, gas, r_sh, n)

    def _subsonic_floor(self) -> float:
        gas = self.gas
        ustar = gas.sonic_speed
        rs_star = _rho_of_u(ustar, self.S_plus, gas) * ustar
        r_throat = math.sqrt(self.m / rs_star)
        lo = max(self.r_sh - FRONT_BAND, 1.05 * r_throat)
        return min(lo, self.r_sh)

    # -- queries -------------------------------------------------------
    def _branch(self, side: str) -> _Branch:
        return self._minus if side == "-" else self._plus

    def velocity(self, r, side: str = "+") -> np.ndarray:
        b = self._branch(side)
        r = np.asarray(r, dtype=float)
        u = b.spline(r)
        return _polish(u, r, b.m, b.S, self.gas)

    def state(self, r, side: str = "+"):
        """Return ``(rho, u, p)`` arrays on the requested branch."""
        b = self._branch(side)
        u = self.velocity(r, side)
        rho = _rho_of_u(u, b.S, self.gas)
        return rho, u, b.S * rho**self.gas.gamma

    def potential(self, r, side: str = "+") -> np.ndarray:
        """Radial potential with zero value at ``r_sh``."""
        b = self._branch(side)
        return b.anti(np.asarray(r, dtype=float)) - b.phi_ref

    def dvelocity(self, r, side: str = "+") -> np.ndarray:
        """``du/dr`` from ``d(r^2 rho u) = 0``."""
        rho, u, p = self.state(r, side)
        mach2 = rho * u * u / (self.gas.gamma * p)
        return -2.0 * u / (np.asarray(r) * (1.0 - mach2))

    def flux_A(self, side: str = "+") -> float:
        """Constant ``r^2 A_r`` of the entropy-free flux on a branch."""
        b = self._branch(side)
        return self.m * float(entropy_factor(b.S, self.gas))

    @property
    def exit_state(self):
        return self.state(self.geom.r_ex, "+")

    def exit_pressure(self) -> float:
        return float(self.state(self.geom.r_ex, "+")[2])

    def table(self, side: str):
        """Node radii and ``(rho, u, p, mach, S)`` of one branch."""
        b = self._branch(side)
        rho = _rho_of_u(b.u, b.S, self.gas)
        p = b.S * rho**self.gas.gamma
        mach = b.u / np.sqrt(self.gas.gamma * p / rho)
        return b.r, rho, b.u, p, mach, np.full_like(b.r, b.S)

    def to_rows(self):
        """Physical profile rows: supersonic up to ``r_sh``, subsonic after."""
        rows = []
        for side, keep in (("-", lambda r: r < self.r_sh), ("+", lambda r: r >= self.r_sh)):
            r, rho, u, p, mach, S = self.table(side)
            for i in np.flatnonzero(keep(r)):
                rows.append((r[i], rho[i], u[i], p[i], mach[i], S[i]))
        rows.sort(key=lambda t: t[0])
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "rho", "u", "p", "mach", "S"])
            for row in self.to_rows():
                w.writerow([f"{v:.16e}" for v in row])


def profile_for_shock(geom: NozzleGeom, entrance: EntranceData, r_sh: float,
                      gas, n: int = N_CHEB) -> RadialProfile:
    """Background profile; ``gas`` may be a GasModel or a bare gamma."""
    gamma = gas.gamma if isinstance(gas, GasModel) else float(gas)
    return RadialProfile(geom, entrance, r_sh, gamma, n)


def exit_pressure_for_shock(geom: NozzleGeom, entrance: EntranceData, r_sh: float,
                            gamma: float) -> float:
    """``p0+(r_ex; r_sh)`` without tabulating the branches."""
    gas = gas_for_entrance(gamma, entrance)
    m = geom.r_en**2 * entrance.rho_en * entrance.u_en
    S_m = entrance.entropy(gamma)
    if r_sh == geom.r_en:
        minus = (entrance.rho_en, entrance.u_en, entrance.p_en)
    else:
        minus = radial_state(r_sh, m, S_m, SUPERSONIC, gas)
    rp, up, pp = rh_jump(*minus, gas)
    S_p = pp / rp**gamma
    if r_sh == geom.r_ex:
        return pp
    return radial_state(geom.r_ex, m, S_p, SUBSONIC, gas)[2]


def exit_pressure_bounds(geom: NozzleGeom, entrance: EntranceData, gamma: float):
    """``(p_min, p_max)``: shock at the exit and at the entrance."""
    return (exit_pressure_for_shock(geom, entrance, geom.r_ex, gamma),
            exit_pressure_for_shock(geom, entrance, geom.r_en, gamma))


def shock_from_exit_pressure(geom: NozzleGeom, entrance: EntranceData, p_c: float,
                             gas, tol: float = 1e-10) -> float:
    """Shock radius whose background exit pressure equals ``p_c``.

    The exit pressure decreases strictly as the shock moves downstream,
    so bisection on ``r_sh`` converges to the unique root.
    """
    gamma = gas.gamma if isinstance(gas, GasModel) else float(gas)
    p_min, p_max = exit_pressure_bounds(geom, entrance, gamma)
    if not (p_min < p_c < p_max):
        raise PressureOutOfRangeError(p_c, p_min, p_max)
    lo, hi = geom.r_en, geom.r_ex
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exit_pressure_for_shock(geom, entrance, mid, gamma) > p_c:
            lo = mid
        else:
            hi = mid
    # secant polish inside the final bracket
    p_lo = exit_pressure_for_shock(geom, entrance, lo, gamma)
    p_hi = exit_pressure_for_shock(geom, entrance, hi, gamma)
    if p_lo != p_hi:
        r = lo + (p_c - p_lo) * (hi - lo) / (p_hi - p_lo)
        if lo <= r <= hi:
            return r
    return 0.5 * (lo + hi)

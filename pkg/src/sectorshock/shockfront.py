"""Shock-surface data and the free-boundary update.

All vectors on the meridian plane are stored with components
``(e_r, e_phi)``; full velocities carry a third swirl component.  The
front normal points downstream and is the geometric unit normal of the
curve ``r = f(phi)``, ``n = (f e_r - f' e_phi)/sqrt(f^2 + f'^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, FrontOutOfRangeError, NotSupersonicError
from .gas import GasModel, bernoulli, entropy_factor, flux_jacobian, sound_speed, speed2
from .geometry import FrontLike, ShockFront, _front_eval

FRONT_BAND = 0.25
DEFAULT_OMEGA = 0.7
CLIP_LIMIT = 0.10


# -- geometry of the front -----------------------------------------------------

def frame(f, fp):
    """Unit normal and tangent ``(n, tau)``; each has trailing axis 2.

    ``tau`` is ``n`` rotated so that it points towards increasing ``phi``.
    """
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    N = np.sqrt(f * f + fp * fp)
    n = np.stack([f / N, -fp / N], axis=-1)
    tau = np.stack([fp / N, f / N], axis=-1)
    return n, tau


def metric_length(f, fp):
    """``sqrt(f^2 + f'^2)``, the arc length per unit ``phi``."""
    return np.sqrt(np.asarray(f) ** 2 + np.asarray(fp) ** 2)


def unit_radius_normal(f, fp):
    """The quantity ``((1/f) e_r - f' e_phi)/sqrt(1/f^2 + f'^2)``.

    It agrees with :func:`frame` when ``f' = 0`` or ``f = 1`` and is kept
    for comparison only.
    """
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    N = np.sqrt(1.0 / f**2 + fp**2)
    return np.stack([1.0 / (f * N), -fp / N], axis=-1)


def unit_radius_mu(f, fp, phi):
    """``f' cos(phi)/(f sin(phi)) - 1/f^2``.

    Unit-radius counterpart of the Robin coefficient, kept for comparison.
    """
    f = np.asarray(f, dtype=float)
    return np.asarray(fp) * np.cos(phi) / (f * np.sin(phi)) - 1.0 / f**2


def robin_coefficients(f, fp, phi, psi, psi_r, psi_phi):
    """Robin pair ``(mu, data)`` for ``-grad psi . n + mu psi = data``.

    Continuity of the tangential velocity across the front makes the
    tangential component of ``curl(psi e_theta)`` continuous; written for
    the downstream ``psi`` this gives ``mu = (f' cot(phi)/f - 1)/N`` with
    ``N = sqrt(f^2 + f'^2)`` and data from the upstream stream component.
    """
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    N = metric_length(f, fp)
    cot = np.cos(phi) / np.sin(phi)
    mu = (fp * cot / f - 1.0) / N
    rhs = (fp / f) * (cot * psi + psi_phi) - psi - f * psi_r
    return mu, rhs / N


def shock_constant(vel, n, gas: GasModel):
    """``K_s = 2(g-1)/(g+1) (B0 - |u_tau|^2/2)``, the Prandtl product.

    ``u_tau`` collects every velocity component orthogonal to ``n``.
    """
    un = vel[..., 0] * n[..., 0] + vel[..., 1] * n[..., 1]
    ut2 = speed2(vel) - un * un
    g = gas.gamma
    return 2.0 * (g - 1.0) / (g + 1.0) * (gas.b0 - 0.5 * ut2)


# -- shock data ---------------------------------------------------------------------

@dataclass
class ShockData:
    """Per-node traces and jump data on the front.

    Attributes
    ----------
    phi, f, fp : ndarray
        Sample angles, front radius and slope.
    n, tau : ndarray, shape (m, 2)
        Downstream unit normal and unit tangent.
    rho_m, vel_m, p_m : ndarray
        Upstream trace; ``vel_m`` has trailing axis 3.
    un_m, un_p : ndarray
        Normal velocity before and after the jump.
    K_s, S_sh : ndarray
        Prandtl product and downstream entropy.
    rho_p, p_p, vel_p : ndarray
        Downstream state on the front.
    mu, robin : ndarray
        Robin coefficient and data for the stream component.
    swirl : ndarray
        Upstream swirl, continuous across the front.
    """

    phi: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    n: np.ndarray
    tau: np.ndarray
    rho_m: np.ndarray
    vel_m: np.ndarray
    p_m: np.ndarray
    un_m: np.ndarray
    un_p: np.ndarray
    K_s: np.ndarray
    S_sh: np.ndarray
    rho_p: np.ndarray
    p_p: np.ndarray
    vel_p: np.ndarray
    mu: np.ndarray
    robin: np.ndarray
    swirl: np.ndarray
    gas: GasModel

    @property
    def mass_flux(self) -> np.ndarray:
        """Mass through the front per unit ``phi`` (and per radian of ``theta``)."""
        return self.f * np.sin(self.phi) * metric_length(self.f, self.fp) * self.rho_m * self.un_m

    @property
    def flux_A(self) -> np.ndarray:
        """Entropy-free flux through the front per unit ``phi``."""
        return self.mass_flux * entropy_factor(self.S_sh, self.gas)

    @property
    def mu_unit_radius(self) -> np.ndarray:
        return unit_radius_mu(self.f, self.fp, self.phi)


def shock_data(front: FrontLike, upstream, phi=None) -> ShockData:
    """Evaluate the jump conditions along the front.

    Parameters
    ----------
    front : ShockFront, float or callable
    upstream : UpstreamFlow
        Supplies the supersonic state and its stream component.
    phi : array_like, optional
        Sample angles; defaults to the front nodes.

    Raises
    ------
    NotSupersonicError
        If the upstream trace is not supersonic.
    AdmissibilityError
        If the normal velocities violate ``u-.n > u+.n > 0``.
    """
    if phi is None:
        phi = front.phi if isinstance(front, ShockFront) else None
    if phi is None:
        raise ValueError("sample angles are required for a non-spline front")
    phi = np.asarray(phi, dtype=float)
    return shock_data_at(_front_eval(front, phi), _front_eval(front, phi, 1), phi, upstream)


def shock_data_at(f, fp, phi, upstream) -> ShockData:
    """:func:`shock_data` for explicit front radius and slope arrays."""
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    phi = np.asarray(phi, dtype=float)
    gas = upstream.gas
    g = gas.gamma
    rho, vel, p = upstream.state(f, phi)
    mach = np.sqrt(speed2(vel)) / sound_speed(rho, p, gas)
    if np.any(mach <= 1.0):
        raise NotSupersonicError(f"upstream trace Mach {mach.min():.4f} <= 1")
    n, tau = frame(f, fp)
    un = vel[..., 0] * n[..., 0] + vel[..., 1] * n[..., 1]
    if np.any(un <= 0.0):
        raise AdmissibilityError("upstream flow does not cross the front downstream")
    K_s = shock_constant(vel, n, gas)
    if np.any(K_s <= 0.0):
        raise AdmissibilityError("non-positive Prandtl product")
    un_p = K_s / un
    if np.any(un_p >= un):
        raise AdmissibilityError("normal velocity does not drop across the front")
    rho_p = rho * un * un / K_s
    p_p = rho * un * un + p - rho * K_s
    if np.any(p_p <= 0.0):
        raise AdmissibilityError("downstream pressure bracket is not positive")
    S_sh = p_p * rho_p ** (-g)
    vel_p = vel.copy()
    jump = un - un_p
    vel_p[..., 0] -= jump * n[..., 0]
    vel_p[..., 1] -= jump * n[..., 1]
    psi, psi_r, psi_phi = upstream.psi(f, phi)
    mu, robin = robin_coefficients(f, fp, phi, psi, psi_r, psi_phi)
    return ShockData(phi, f, fp, n, tau, rho, vel, p, un, un_p, K_s, S_sh,
                     rho_p, p_p, vel_p, mu, robin, upstream.swirl(phi), gas)


def rh_residuals(n, tau, minus, plus, gas: GasModel) -> dict:
    """Jumps of mass, normal momentum, energy and tangential velocity.

    ``minus``/``plus`` are ``(rho, vel, p)`` triples at the same points.
    Conserved-flux jumps are scaled by the upstream flux and velocity
    jumps by the upstream speed.
    """
    out = {}
    terms = []
    for rho, vel, p in (minus, plus):
        un = vel[..., 0] * n[..., 0] + vel[..., 1] * n[..., 1]
        ut = vel[..., 0] * tau[..., 0] + vel[..., 1] * tau[..., 1]
        B = bernoulli(rho, vel, p, gas)
        terms.append((rho * un, rho * un * un + p, rho * un * B, ut, vel[..., 2]))
    names = ("mass", "momentum", "energy", "tangential", "swirl")
    speed = float(np.max(np.sqrt(speed2(minus[1]))))
    for k, (name, a, b) in enumerate(zip(names, terms[0], terms[1])):
        scale = float(np.max(np.abs(a))) if k < 3 else speed
        out[name] = float(np.max(np.abs(a - b)) / scale)
    return out


# -- free-boundary update -----------------------------------------------------------

def apply_front_step(front: ShockFront, delta, r_sh: float, omega: float = DEFAULT_OMEGA,
                     band: float = FRONT_BAND) -> tuple[ShockFront, int]:
    """Damped step ``f + omega delta`` projected into the admissible band.

    Returns the new front and the number of clipped nodes.

    Raises
    ------
    FrontOutOfRangeError
        If more than a tenth of the nodes had to be clipped.
    """
    new = front.values + omega * np.asarray(delta, dtype=float)
    lo, hi = r_sh - band, r_sh + band
    margin = 1e-3 * band
    clipped = (new <= lo + margin) | (new >= hi - margin)
    n_clip = int(np.count_nonzero(clipped))
    if n_clip > CLIP_LIMIT * new.size:
        raise FrontOutOfRangeError(f"{n_clip} of {new.size} front nodes left the band")
    new = np.clip(new, lo + margin, hi - margin)
    return ShockFront(front.phi, new, front.phi0), n_clip


def jump_residual(front: ShockFront, chi_shock, upstream, profile):
    """``phi- - phi0+ - chi`` at the front nodes.

    ``chi_shock`` holds the downstream potential deviation at the nodes.
    """
    f = front.values
    return (upstream.potential(f, front.phi) - profile.potential(f, "+")
            - np.asarray(chi_shock, dtype=float))


def update_front(front: ShockFront, chi_shock, upstream, profile, dr_chi=0.0,
                 omega: float = DEFAULT_OMEGA, band: float = FRONT_BAND):
    """One damped Newton step on the potential jump, node by node.

    Returns
    -------
    new_front : ShockFront
    residual : ndarray
        Jump residual at the old front.
    """
    f = front.values
    J = jump_residual(front, chi_shock, upstream, profile)
    dJ = upstream.dr_potential(f, front.phi) - profile.velocity(f, "+") - dr_chi
    if np.any(dJ <= 0.0):
        raise AdmissibilityError("potential jump is not increasing across the front")
    new, _ = apply_front_step(front, -J / dJ, profile.r_sh, omega, band)
    return new, J


# -- linearized shock condition -----------------------------------------------------

def mu0(profile) -> float:
    """Limit of :func:`mu_f` at the background shock."""
    r = profile.r_sh
    K0 = profile.gas.k0
    um, up = profile.velocity(r, "-"), profile.velocity(r, "+")
    num = -K0 * profile.dvelocity(r, "-") / um**2 - profile.dvelocity(r, "+")
    return float(num / (um - up))


def mu_f(profile, f) -> np.ndarray:
    """Difference quotient of ``K0/u0- - u0+`` against ``phi0- - phi0+``.

    Both numerator and denominator vanish at ``r_sh``, where the quotient
    is replaced by its limit :func:`mu0`.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    K0 = profile.gas.k0
    out = np.full(f.shape, mu0(profile))
    far = np.abs(f - profile.r_sh) > 1e-7
    if np.any(far):
        x = f[far]
        num = K0 / profile.velocity(x, "-") - profile.velocity(x, "+")
        den = profile.potential(x, "-") - profile.potential(x, "+")
        out[far] = num / den
    return out


def g1_data(sd: ShockData, profile, t_normal=0.0) -> np.ndarray:
    """Conormal datum for the potential deviation on the front.

    The downstream normal velocity is fixed by the jump to
    ``K_s/(u-.n)``; subtracting the background gradient and the rotational
    part ``t.n`` leaves ``grad chi . n``, weighted by the background
    coefficient ``a_rr`` at the front.
    """
    u0 = profile.velocity(sd.f, "+")
    a_rr = flux_jacobian(np.stack([u0, 0 * u0, 0 * u0], axis=-1), profile.gas)[..., 0, 0]
    return a_rr * (sd.un_p - np.asarray(t_normal) - u0 * sd.n[..., 0])

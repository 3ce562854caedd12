"""Supersonic upstream flow: the radial background plus smooth modes.

The perturbed state is built from a potential, a stream component, a
swirl and an entropy mode, with density and pressure taken from the
Bernoulli closure, so ``B = B0`` holds identically.  Only its trace on
the shock enters the downstream problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, NotSupersonicError
from .gas import GasModel, density_closure, sound_speed, speed2


@dataclass(frozen=True)
class PerturbationSpec:
    """Single-mode perturbation family scaled by ``sigma``.

    With ``k = pi/phi0`` the upstream flow is

    - potential ``phi0-(r) + sigma a_phi (r - r_en) cos(k phi)``
    - stream component ``sigma a_psi (r - r_en) sin(k phi)``
    - swirl ``Lambda = sigma a_lam sin(phi)^2``
    - entropy ``S0- (1 + sigma a_S cos(k phi))``

    and the exit pressure is ``p0+(r_ex) (1 + sigma (a_ex0 + a_ex1 cos(k phi)))``.
    """

    sigma: float = 0.0
    a_phi: float = 0.2
    a_psi: float = 0.05
    a_lam: float = 0.0
    a_S: float = 0.25
    a_ex0: float = 0.0
    a_ex1: float = 0.25

    def __post_init__(self):
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise InvalidInputError(f"sigma must be finite and >= 0, got {self.sigma}")

    def scaled(self, sigma: float) -> "PerturbationSpec":
        return replace(self, sigma=float(sigma))

    @property
    def swirl_free(self) -> bool:
        return self.sigma * self.a_lam == 0.0


class UpstreamFlow:
    """Evaluate the upstream fields at arbitrary ``(r, phi)``."""

    def __init__(self, profile, spec: PerturbationSpec | None = None):
        self.profile = profile
        self.spec = spec or PerturbationSpec()
        self.gas: GasModel = profile.gas
        self.k = math.pi / profile.geom.phi0
        self.r_en = profile.geom.r_en

    def _amps(self):
        s = self.spec
        return s.sigma * s.a_phi, s.sigma * s.a_psi, s.sigma * s.a_lam, s.sigma * s.a_S

    def potential(self, r, phi):
        a, _, _, _ = self._amps()
        r = np.asarray(r, dtype=float)
        return self.profile.potential(r, "-") + a * (r - self.r_en) * np.cos(self.k * np.asarray(phi))

    def grad_potential(self, r, phi):
        """``(d/dr, (1/r) d/dphi)`` of the potential."""
        a, _, _, _ = self._amps()
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        gr = self.profile.velocity(r, "-") + a * np.cos(self.k * phi)
        gp = -a * (r - self.r_en) * self.k * np.sin(self.k * phi) / r
        return gr, gp

    def dr_potential(self, r, phi):
        return self.grad_potential(r, phi)[0]

    def psi(self, r, phi):
        """Stream component and its partial derivatives ``(psi, psi_r, psi_phi)``."""
        _, b, _, _ = self._amps()
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        sn, cs = np.sin(self.k * phi), np.cos(self.k * phi)
        return b * (r - self.r_en) * sn, b * sn, b * (r - self.r_en) * self.k * cs

    def swirl(self, phi):
        _, _, c, _ = self._amps()
        return c * np.sin(np.asarray(phi, dtype=float)) ** 2

    def entropy(self, phi):
        _, _, _, d = self._amps()
        return self.profile.S_minus * (1.0 + d * np.cos(self.k * np.asarray(phi, dtype=float)))

    def velocity(self, r, phi):
        """Spherical components ``(u_r, u_phi, u_theta)``, trailing axis."""
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        gr, gp = self.grad_potential(r, phi)
        p, pr, pp = self.psi(r, phi)
        sn = np.sin(phi)
        ur = gr + (pp + np.cos(phi) / sn * p) / r
        uphi = gp - p / r - pr
        uth = self.swirl(phi) / (r * sn)
        return np.stack(np.broadcast_arrays(ur, uphi, uth), axis=-1)

    def state(self, r, phi):
        """``(rho, vel, p)`` with the closure density."""
        q = self.velocity(r, phi)
        S = self.entropy(phi)
        rho = density_closure(S, q, self.gas)
        return rho, q, S * rho**self.gas.gamma

    def mach(self, r, phi):
        rho, q, p = self.state(r, phi)
        return np.sqrt(speed2(q)) / sound_speed(rho, p, self.gas)

    def check_supersonic(self, r, phi) -> float:
        """Minimum Mach number at the sample points; raises if not above 1."""
        m = float(np.min(self.mach(r, phi)))
        if not m > 1.0:
            raise NotSupersonicError(f"upstream Mach {m:.4f} <= 1 near the front")
        return m

    def exit_pressure(self, phi):
        s = self.spec
        p0 = self.profile.exit_pressure()
        return p0 * (1.0 + s.sigma * (s.a_ex0 + s.a_ex1 * np.cos(self.k * np.asarray(phi, dtype=float))))

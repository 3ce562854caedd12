"""Polytropic gas closures.

Velocities are arrays whose last axis holds the spherical components
``(u_r, u_phi, u_theta)``.  All functions broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, StagnationError, VacuumError

VACUUM_MARGIN = 1e-10


@dataclass(frozen=True)
class GasModel:
    """Adiabatic exponent and Bernoulli constant.

    Parameters
    ----------
    gamma : float
        Ratio of specific heats, ``gamma > 1``.
    b0 : float
        Bernoulli constant ``|u|^2/2 + gamma p / ((gamma-1) rho)``.
    """

    gamma: float
    b0: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise InvalidInputError(f"gamma must exceed 1, got {self.gamma}")
        if not self.b0 > 0.0:
            raise InvalidInputError(f"b0 must be positive, got {self.b0}")

    @property
    def k0(self) -> float:
        """Square of the sonic speed of the Bernoulli family."""
        return 2.0 * (self.gamma - 1.0) * self.b0 / (self.gamma + 1.0)

    @property
    def sonic_speed(self) -> float:
        return float(np.sqrt(self.k0))

    def with_b0(self, b0: float) -> "GasModel":
        return GasModel(self.gamma, b0)


@dataclass(frozen=True)
class PrimState:
    """Density, velocity (spherical components) and pressure."""

    rho: np.ndarray
    vel: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.rho) <= 0) or np.any(np.asarray(self.p) <= 0):
            raise InvalidInputError("density and pressure must be positive")


def speed2(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def bernoulli(rho, vel, p, gas: GasModel) -> np.ndarray:
    """Return ``|u|^2/2 + gamma p / ((gamma-1) rho)``."""
    g = gas.gamma
    return 0.5 * speed2(vel) + g * np.asarray(p) / ((g - 1.0) * np.asarray(rho))


def _head(q2, gas: GasModel):
    head = gas.b0 - 0.5 * np.asarray(q2)
    if np.any(np.asarray(q2) >= 2.0 * gas.b0 * (1.0 - VACUUM_MARGIN)):
        raise VacuumError(f"|q|^2 reached 2 B0 = {2 * gas.b0:.6g}")
    return head


def density_closure(entropy, q, gas: GasModel) -> np.ndarray:
    """Density from entropy and velocity at fixed Bernoulli constant.

    ``rho = [(gamma-1)/(gamma S) (B0 - |q|^2/2)]^(1/(gamma-1))``
    """
    g = gas.gamma
    head = _head(speed2(q), gas)
    return ((g - 1.0) / (g * np.asarray(entropy)) * head) ** (1.0 / (g - 1.0))


def density_from_speed2(entropy, q2, gas: GasModel) -> np.ndarray:
    g = gas.gamma
    head = _head(q2, gas)
    return ((g - 1.0) / (g * np.asarray(entropy)) * head) ** (1.0 / (g - 1.0))


def flux_A(s1, s2, gas: GasModel) -> np.ndarray:
    """Entropy-free mass flux ``(B0 - |s1+s2|^2/2)^(1/(gamma-1)) (s1+s2)``.

    Differs from the physical mass flux by the factor
    ``(gamma S/(gamma-1))^(1/(gamma-1))``, constant along streamlines.
    """
    q = np.asarray(s1, dtype=float) + np.asarray(s2, dtype=float)
    head = _head(speed2(q), gas)
    return (head ** (1.0 / (gas.gamma - 1.0)))[..., None] * q


def entropy_factor(entropy, gas: GasModel) -> np.ndarray:
    """Ratio between the entropy-free flux and the physical mass flux."""
    g = gas.gamma
    return (g * np.asarray(entropy) / (g - 1.0)) ** (1.0 / (g - 1.0))


def flux_jacobian(q, gas: GasModel) -> np.ndarray:
    """Derivative ``dA_j/dq_i`` of the entropy-free flux.

    ``a_ij = H^(1/(g-1)) delta_ij - H^((2-g)/(g-1)) q_i q_j / (g-1)``
    with ``H = B0 - |q|^2/2``.  Returned with trailing shape ``(3, 3)``.
    """
    q = np.asarray(q, dtype=float)
    g = gas.gamma
    head = _head(speed2(q), gas)
    iso = head ** (1.0 / (g - 1.0))
    aniso = head ** ((2.0 - g) / (g - 1.0)) / (g - 1.0)
    eye = np.eye(q.shape[-1])
    return iso[..., None, None] * eye - aniso[..., None, None] * q[..., :, None] * q[..., None, :]


def source_G(r, phi, S, Lam, dphi_S, dphi_Lam, q, gas: GasModel) -> np.ndarray:
    """Azimuthal vorticity implied by entropy and swirl gradients.

    ``G = [dS/dphi rho^(g-1)/(g-1) + Lam dLam/dphi / (r sin phi)^2] / (r q_r)``
    where ``rho`` is the closure density at ``(S, q)``.
    """
    q = np.asarray(q, dtype=float)
    qr = q[..., 0]
    if np.any(qr <= 0.0):
        raise StagnationError("radial velocity must stay positive")
    g = gas.gamma
    rho = density_closure(S, q, gas)
    rs = np.asarray(r) * np.sin(phi)
    return (np.asarray(dphi_S) * rho ** (g - 1.0) / (g - 1.0)
            + np.asarray(Lam) * np.asarray(dphi_Lam) / rs**2) / (np.asarray(r) * qr)


def sound_speed(rho, p, gas: GasModel) -> np.ndarray:
    return np.sqrt(gas.gamma * np.asarray(p) / np.asarray(rho))


def mach(rho, vel, p, gas: GasModel) -> np.ndarray:
    return np.sqrt(speed2(vel)) / sound_speed(rho, p, gas)


def entropy(rho, p, gas: GasModel) -> np.ndarray:
    return np.asarray(p) / np.asarray(rho) ** gas.gamma


def state_from_entropy(S, q, gas: GasModel):
    """Return ``(rho, p)`` from entropy and velocity via the closure."""
    rho = density_closure(S, q, gas)
    return rho, np.asarray(S) * rho**gas.gamma

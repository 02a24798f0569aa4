"""Polytropic gas background state and the density map H(B, K, |u|^2)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class AdmissibilityError(ValueError):
    """A state left the subsonic, positive-density regime."""


@dataclass(frozen=True)
class GasState:
    """Uniform subsonic background (rho, u, K) for a gas with ratio of specific heats gamma."""

    rho: float = 1.0
    u: float = 0.5
    K: float = 1.0
    gamma: float = 1.4

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.rho <= 0 or self.u <= 0 or self.K <= 0:
            raise ValueError("background density, velocity and entropy must be positive")
        if self.mach2 >= 1.0:
            raise ValueError(f"background flow is not subsonic (M^2 = {self.mach2:.6g})")

    @property
    def c2(self) -> float:
        return self.gamma * self.K * self.rho ** (self.gamma - 1.0)

    @property
    def B(self) -> float:
        return 0.5 * self.u**2 + self.c2 / (self.gamma - 1.0)

    @property
    def mach2(self) -> float:
        return self.u**2 / self.c2

    @property
    def pressure(self) -> float:
        return self.K * self.rho**self.gamma

    def as_dict(self) -> dict:
        return {"rho": self.rho, "u": self.u, "K": self.K, "gamma": self.gamma,
                "B": self.B, "c2": self.c2, "mach2": self.mach2}


def sound_speed2(B, speed2, gamma: float):
    """c^2 = (gamma - 1)(B - |u|^2/2), the local sound speed squared."""
    return (gamma - 1.0) * (np.asarray(B) - 0.5 * np.asarray(speed2))


def density_map(B, K, speed2, gamma: float):
    """Density from Bernoulli, entropy and speed squared.

    Returns (rho, c2, mach2).  Raises AdmissibilityError when the enthalpy
    argument is non-positive or the local flow is not subsonic.
    """
    c2 = sound_speed2(B, speed2, gamma)
    if np.any(c2 <= 0) or not np.all(np.isfinite(c2)):
        raise AdmissibilityError("B - |u|^2/2 must stay positive")
    if np.any(np.asarray(K) <= 0):
        raise AdmissibilityError("entropy K must stay positive")
    rho = (c2 / (gamma * np.asarray(K))) ** (1.0 / (gamma - 1.0))
    mach2 = np.asarray(speed2) / c2
    if np.any(mach2 >= 1.0):
        raise AdmissibilityError(f"flow is not subsonic (max M^2 = {float(np.max(mach2)):.6g})")
    return rho, c2, mach2


def density_partials(B, K, speed2, gamma: float):
    """(dH/dB, dH/dK, dH/d|u|^2) at the given state."""
    rho, c2, _ = density_map(B, K, speed2, gamma)
    return rho / c2, -rho / ((gamma - 1.0) * np.asarray(K)), -0.5 * rho / c2

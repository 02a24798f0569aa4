"""Transport along the characteristics of d/dx1 + w . grad'.

The advection field w = V'/(u + V1) is tangent to the wall, so every node
traces back to a unique foot point on the inlet section.  Pure transport
copies the inlet value from the foot point; damped transport adds the
Duhamel integral of the source along the path.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _fd, _kernels
from .fields import Grid3
from .gas import AdmissibilityError, GasState

log = logging.getLogger(__name__)

MAX_ADVECTION = 0.5
TANGENCY_TOL = 1e-8


class TransportError(RuntimeError):
    """A characteristic had to be pulled back by more than one grid spacing."""


@dataclass
class TraceStats:
    projections: int = 0
    max_distance: float = 0.0
    warnings: int = 0

    def merge(self, other: "TraceStats") -> "TraceStats":
        return TraceStats(self.projections + other.projections,
                          max(self.max_distance, other.max_distance),
                          self.warnings + other.warnings)

    def as_dict(self) -> dict:
        return {"projections": self.projections, "max_distance": self.max_distance,
                "warnings": self.warnings}


@dataclass
class Characteristic:
    tau: np.ndarray  # decreasing from x1 to 0
    path: np.ndarray  # (len(tau), 2)

    @property
    def foot(self) -> np.ndarray:
        return self.path[-1]


class AdvectionField:
    """Cross-sectional advection field w on the grid."""

    def __init__(self, grid: Grid3, w2: np.ndarray, w3: np.ndarray, check: bool = True):
        self.grid = grid
        self.w2 = np.asarray(w2, dtype=float)
        self.w3 = np.asarray(w3, dtype=float)
        if self.w2.shape != grid.shape or self.w3.shape != grid.shape:
            raise ValueError("advection components must match the grid shape")
        self.is_zero = not (np.any(self.w2) or np.any(self.w3))
        if check:
            self.validate()
        self._lattice = None

    @classmethod
    def from_velocity(cls, grid: Grid3, V: np.ndarray, gas: GasState, check: bool = True):
        u1 = gas.u + V[0]
        if np.any(u1 <= 0):
            raise AdmissibilityError("axial velocity must stay positive")
        return cls(grid, V[1] / u1, V[2] / u1, check=check)

    @property
    def max_norm(self) -> float:
        return float(np.sqrt(self.w2**2 + self.w3**2).max())

    def tangency_error(self) -> float:
        return float(np.abs(self.grid.section.normal_component(self.w2, self.w3)).max())

    def validate(self):
        if self.max_norm > MAX_ADVECTION:
            raise AdmissibilityError(f"|w| = {self.max_norm:.3g} exceeds {MAX_ADVECTION}")
        if self.grid.section.kind != "grid-mask" and self.tangency_error() > TANGENCY_TOL:
            raise ValueError(f"advection field is not tangent to the wall ({self.tangency_error():.3g})")

    def divergence(self) -> np.ndarray:
        return self.grid.d2(self.w2) + self.grid.d3(self.w3)

    def lattice(self):
        """Advection on the x1-refined lattice (polar components on the disk)."""
        if self._lattice is None:
            grid = self.grid
            a, b = self.w2, self.w3
            if grid.section.kind == "disk":
                th = grid.section.theta_nodes
                c, s = np.cos(th), np.sin(th)
                a, b = c * self.w2 + s * self.w3, -s * self.w2 + c * self.w3
            self._lattice = (_refined(grid, a), _refined(grid, b))
        return self._lattice


def _refined(grid: Grid3, f: np.ndarray) -> np.ndarray:
    fine = _fd.refine_matrix(grid.n1, 4) @ f
    return np.ascontiguousarray(grid.section.to_lattice(fine))


def _kernel_args(grid: Grid3):
    sec = grid.section
    return sec.kind_code, sec.geo, sec.inside, sec.near_i, sec.near_j


def _warn_distance(grid: Grid3) -> float:
    return 10.0 * grid.h1**4


def _run(adv: AdvectionField, mu=None, src=None):
    grid = adv.grid
    sec = grid.section
    duhamel = mu is not None
    if adv.is_zero:
        wa = wb = np.zeros((1, 1, 1))
    else:
        wa, wb = adv.lattice()
    if duhamel:
        mu_l, src_l = _refined(grid, mu), _refined(grid, src)
    else:
        mu_l = src_l = np.zeros((1, 1, 1))
    pts = sec.points
    foot2, foot3, decay, integ, stats = _kernels.trace_all(
        *_kernel_args(grid), wa, wb, pts[:, 0].copy(), pts[:, 1].copy(), sec.node_a, sec.node_b,
        grid.n1, grid.h1, mu_l, src_l, duhamel, adv.is_zero, _warn_distance(grid))
    info = TraceStats(int(stats[0]), float(stats[1]), int(stats[2]))
    if info.max_distance > sec.spacing:
        raise TransportError(f"characteristic left the section by {info.max_distance:.3g}, "
                             f"more than the grid spacing {sec.spacing:.3g}")
    if info.warnings:
        log.warning("%d wall projections exceeded %.3g", info.warnings, _warn_distance(grid))
    return foot2, foot3, decay, integ, info


def _inlet_values(grid: Grid3, inlet, x2, x3) -> np.ndarray:
    if callable(inlet):
        return np.asarray(inlet(x2, x3), dtype=float) * np.ones_like(x2)
    data = np.asarray(inlet, dtype=float)
    if data.shape != (grid.section.n_nodes,):
        raise ValueError("nodal inlet data must have one value per section node")
    lat = np.ascontiguousarray(grid.section.to_lattice(data[None, :]))
    flat2, flat3 = x2.ravel(), x3.ravel()
    out = _kernels.interpolate_section(grid.section.kind_code, grid.section.geo, lat, flat2, flat3)
    out = out.reshape(x2.shape)
    out[0] = data  # exact at the inlet
    return out


def trace_characteristic(adv: AdvectionField, station: int, x2: float, x3: float) -> Characteristic:
    """Path of the characteristic through (x1_station, x2, x3), traced back to x1 = 0."""
    grid = adv.grid
    if not 0 <= station < grid.n1:
        raise ValueError("station index out of range")
    if not grid.section.contains(x2, x3, tol=1e-12):
        raise ValueError("start point lies outside the cross section")
    wa, wb = adv.lattice() if not adv.is_zero else (np.zeros((4 * grid.n1, 1, 1)),) * 2
    if adv.is_zero:
        n = 2 * station + 1
        tau = station * grid.h1 - 0.5 * grid.h1 * np.arange(n)
        return Characteristic(tau, np.tile([x2, x3], (n, 1)))
    tau, path = _kernels.trace_path(*_kernel_args(grid), wa, wb, station, grid.h1, float(x2), float(x3))
    return Characteristic(tau, path)


def foot_points(adv: AdvectionField):
    foot2, foot3, _, _, info = _run(adv)
    return foot2, foot3, info


def solve_scalar_transport(adv: AdvectionField, inlet):
    """Solve d1 f + w . grad' f = 0 with f = inlet on x1 = 0.

    ``inlet`` is either a callable (x2, x3) -> values, evaluated exactly at
    the foot points, or nodal values on the inlet section.
    Returns the field and the trace statistics.
    """
    foot2, foot3, info = foot_points(adv)
    return _inlet_values(adv.grid, inlet, foot2, foot3), info


def solve_scalar_transports(adv: AdvectionField, inlets):
    """Several scalar transports along the same field, sharing one trace."""
    foot2, foot3, info = foot_points(adv)
    return [_inlet_values(adv.grid, inlet, foot2, foot3) for inlet in inlets], info


def solve_damped_transport(adv: AdvectionField, mu: np.ndarray, source: np.ndarray, inlet):
    """Solve d1 f + w . grad' f + mu f = source with f = inlet on x1 = 0 (Duhamel form)."""
    grid = adv.grid
    if mu.shape != grid.shape or source.shape != grid.shape:
        raise ValueError("damping and source must match the grid shape")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(source))):
        raise ValueError("damping or source contains non-finite values")
    foot2, foot3, decay, integ, info = _run(adv, mu, source)
    return _inlet_values(grid, inlet, foot2, foot3) * decay + integ, info

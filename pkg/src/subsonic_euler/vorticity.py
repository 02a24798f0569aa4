"""Vorticity of the linearised iterate.

omega_1 solves a damped transport equation along the characteristics of w,
while omega_2 and omega_3 follow algebraically from omega_1 and the cross
gradients of the Bernoulli function and the entropy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Grid3
from .gas import AdmissibilityError, GasState
from .transport import AdvectionField, TraceStats, solve_damped_transport


def enthalpy_factor(Vbar: np.ndarray, gas: GasState) -> np.ndarray:
    """H^(gamma-1) of the previous iterate, in closed form."""
    g = gas.gamma
    speed2 = (gas.u + Vbar[0]) ** 2 + Vbar[1] ** 2 + Vbar[2] ** 2
    K = gas.K + Vbar[4]
    val = (g - 1.0) / (g * K) * (gas.B + Vbar[3] - 0.5 * speed2)
    if np.any(val <= 0) or np.any(K <= 0):
        raise AdmissibilityError("enthalpy factor must stay positive")
    return val


def _axial(Vbar, gas):
    u1 = gas.u + Vbar[0]
    if np.any(u1 <= 0):
        raise AdmissibilityError("axial velocity must stay positive")
    return u1


def assemble_mu(Vbar: np.ndarray, gas: GasState, grid: Grid3) -> np.ndarray:
    """Damping coefficient: cross-sectional divergence of V'/u1."""
    u1 = _axial(Vbar, gas)
    return grid.d2(Vbar[1] / u1) + grid.d3(Vbar[2] / u1)


def assemble_source(Vbar: np.ndarray, V4: np.ndarray, V5: np.ndarray, gas: GasState, grid: Grid3) -> np.ndarray:
    """Source of the omega_1 equation from the new Bernoulli and entropy perturbations."""
    u1 = _axial(Vbar, gas)
    a = enthalpy_factor(Vbar, gas) / u1
    inv = 1.0 / u1
    c = 1.0 / (gas.gamma - 1.0)
    d2, d3 = grid.d2, grid.d3

    def e2(f):
        return grid.derivative(f, 2, even=True)

    def e3(f):
        return grid.derivative(f, 3, even=True)

    return (-d2(inv) * e3(V4) + d3(inv) * e2(V4)
            - c * d3(a) * e2(V5) + c * d2(a) * e3(V5))


@dataclass
class VorticityTriple:
    omega: np.ndarray  # (3, N1, n)
    divergence_residual: float
    divergence_bound: float
    edge_tangency: float
    trace: TraceStats = field(default_factory=TraceStats)
    source_wall: float = 0.0  # max |R| on the wall relative to max |R|
    end_trace_h1: float = 0.0  # largest H^1(Sigma) norm of d1 omega_1 on the end sections

    @property
    def divergence_ok(self) -> bool:
        return self.divergence_residual <= self.divergence_bound

    def as_dict(self) -> dict:
        return {"divergence_residual": self.divergence_residual,
                "divergence_bound": self.divergence_bound,
                "edge_tangency": self.edge_tangency,
                "source_wall": self.source_wall,
                "end_trace_h1": self.end_trace_h1,
                "trace": self.trace.as_dict()}


def solve_omega1(Vbar, V4, V5, J0, sigma: float, gas: GasState, grid: Grid3, src=None):
    """Axial vorticity with inlet value sigma * J0 (callable or nodal)."""
    adv = AdvectionField.from_velocity(grid, Vbar, gas)
    mu = assemble_mu(Vbar, gas, grid)
    if src is None:
        src = assemble_source(Vbar, V4, V5, gas, grid)
    inlet = (lambda x2, x3: sigma * J0(x2, x3)) if callable(J0) else sigma * np.asarray(J0)
    return solve_damped_transport(adv, mu, src, inlet)


def recover_omega23(Vbar, omega1, V4, V5, gas: GasState, grid: Grid3):
    """omega_2, omega_3 from omega_1 and the gradients of V4, V5.

    B and K are constant along the wall streamlines and their data vanish to
    second order there, so their normal derivatives are zero on the wall and
    the mirrored stencils apply.
    """
    u1 = _axial(Vbar, gas)
    a = enthalpy_factor(Vbar, gas) / (gas.gamma - 1.0)
    g2V4, g3V4 = grid.derivative(V4, 2, even=True), grid.derivative(V4, 3, even=True)
    g2V5, g3V5 = grid.derivative(V5, 2, even=True), grid.derivative(V5, 3, even=True)
    om2 = (Vbar[1] * omega1 + g3V4 - a * g3V5) / u1
    om3 = (Vbar[2] * omega1 - g2V4 + a * g2V5) / u1
    return om2, om3


def audit(omega: np.ndarray, grid: Grid3, atol: float = 1e-14):
    """Divergence residual with an embedded error bound, and the edge tangency.

    The bound is the gap between second- and fourth-order divergences,
    which estimates the truncation error of the coarser one.
    """
    div4 = grid.divergence(omega, 4)
    div2 = grid.divergence(omega, 2)
    res = grid.l2_norm(div4)
    bound = max(grid.l2_norm(div2 - div4), atol * (1.0 + grid.l2_norm(omega[0])))
    sec = grid.section
    edge = 0.0
    for k in (0, grid.n1 - 1):
        b = sec.boundary
        t = sec.normals[:, 0] * omega[2, k, b] - sec.normals[:, 1] * omega[1, k, b]
        edge = max(edge, float(np.abs(t).max()))
    return res, bound, edge


def section_h1(f: np.ndarray, grid: Grid3) -> float:
    """H^1(Sigma) norm of one section field."""
    sec = grid.section
    return float(np.sqrt(sec.integrate(f**2 + (sec.d2 @ f) ** 2 + (sec.d3 @ f) ** 2)))


def vorticity_step(Vbar, V4, V5, J0, sigma: float, gas: GasState, grid: Grid3) -> VorticityTriple:
    src = assemble_source(Vbar, V4, V5, gas, grid)
    omega1, trace = solve_omega1(Vbar, V4, V5, J0, sigma, gas, grid, src=src)
    om2, om3 = recover_omega23(Vbar, omega1, V4, V5, gas, grid)
    omega = np.stack([omega1, om2, om3])
    res, bound, edge = audit(omega, grid)
    peak = np.abs(src).max()
    wall = float(np.abs(src[:, grid.section.boundary]).max() / peak) if peak > 0 else 0.0
    d1w = grid.d1(omega1)
    ends = max(section_h1(d1w[0], grid), section_h1(d1w[-1], grid))
    return VorticityTriple(omega, res, bound, edge, trace, wall, ends)

"""Velocity update: a div-curl part carrying the vorticity plus a potential part.

The new velocity perturbation is V = Vdot + grad(phi) where

* Vdot is divergence free, tangent to the wall, has Vdot_1 = 0 on both end
  sections and curl Vdot = omega;
* phi solves (1 - M^2) d11 phi + Lap' phi = F + M^2 d1 Vdot_1 with Neumann
  data g1 on the inlet, g2 + kappa on the outlet and zero on the wall.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryData
from .fields import Grid3
from .gas import GasState, density_map
from .geometry import EigenBasis
from .modes import solve_mode_odes


def assemble_F(Vbar: np.ndarray, gas: GasState, grid: Grid3) -> np.ndarray:
    """Quadratic remainder of the steady continuity equation written in non-divergence form.

    Expanding sum_ij (delta_ij - u_i u_j / c^2) d_i u_j = 0 about the
    background leaves (1 - M^2) d1 V1 + d2 V2 + d3 V3 on the left; F is the
    rest, evaluated on the previous iterate.
    """
    u = np.stack([gas.u + Vbar[0], Vbar[1], Vbar[2]])
    speed2 = (u**2).sum(axis=0)
    _, c2, _ = density_map(gas.B + Vbar[3], gas.K + Vbar[4], speed2, gas.gamma)
    d = [grid.d1, grid.d2, grid.d3]
    out = -gas.mach2 * d[0](Vbar[0])
    for i in range(3):
        for j in range(3):
            out = out + u[i] * u[j] / c2 * d[i](Vbar[j])
    return out


def _flux_condition(m_sigma, dB, dK, Vb_slice, gas: GasState):
    """Inlet/outlet value of V1 reproducing the prescribed mass flux."""
    rho, u, K, g = gas.rho, gas.u, gas.K, gas.gamma
    c2, M2 = gas.c2, gas.mach2
    speed2 = (u + Vb_slice[0]) ** 2 + Vb_slice[1] ** 2 + Vb_slice[2] ** 2
    H, _, _ = density_map(gas.B + dB, K + dK, speed2, g)
    dH = H - rho
    rem = dH - rho * dB / c2 + rho * dK / ((g - 1.0) * K) + rho * M2 * Vb_slice[0] / u
    lin = m_sigma - u * rho * dB / c2 + u * rho * dK / ((g - 1.0) * K)
    return (lin - u * rem - dH * Vb_slice[0]) / (rho * (1.0 - M2))


def assemble_boundary_g(Vbar, V4, V5, data: BoundaryData, gas: GasState, grid: Grid3, F=None):
    """Neumann data (g1, g2) for the potential and the compatibility constant kappa.

    V4 and V5 are the new Bernoulli and entropy perturbations; Vbar is the
    previous iterate.
    """
    sec = grid.section
    sig = data.sigma
    g1 = _flux_condition(sig * data.nodal("m0", sec), V4[0], V5[0], Vbar[:, 0], gas)
    g2 = _flux_condition(sig * data.nodal("mL", sec), V4[-1], V5[-1], Vbar[:, -1], gas)
    if F is None:
        F = assemble_F(Vbar, gas, grid)
    kappa = (sec.integrate(g1) - sec.integrate(g2) + grid.integrate(F) / (1.0 - gas.mach2)) / sec.area
    return g1, g2, float(kappa)


@dataclass
class PotentialResult:
    phi: np.ndarray
    W: np.ndarray  # (3, N1, n)
    solvability_gap: float


def solve_potential(f_tilde, g1, g2, kappa: float, gas: GasState, basis: EigenBasis, grid: Grid3) -> PotentialResult:
    coef = 1.0 - gas.mach2
    fhat = basis.project(f_tilde)
    b1 = basis.project(g1)
    b2 = basis.project(g2 + kappa)
    sol = solve_mode_odes(basis.lam, coef, fhat, b1, b2, grid.x1, tol=1e-4)
    phi = basis.reconstruct(sol.a)
    w2, w3 = basis.gradient(sol.a)
    W = np.stack([basis.reconstruct(sol.da), w2, w3])
    return PotentialResult(phi, W, sol.solvability_gap)


@dataclass
class DivCurlResult:
    V: np.ndarray  # (3, N1, n)
    stream: np.ndarray  # inlet stream function
    removed_normal: float  # wall-normal part dropped from the lift
    solvability_gap: float
    diagnostics: dict = field(default_factory=dict)


def solve_divcurl(omega: np.ndarray, grid: Grid3, basis: EigenBasis) -> DivCurlResult:
    """Divergence-free field with curl omega, tangent to the wall and with zero V1 on the end sections.

    A particular field Z with curl Z = omega is built from a stream function
    on the inlet section plus x1-integrals of omega_2, omega_3; its
    divergence is then removed with a Neumann potential.
    """
    sec = grid.section
    chi = sec.solve_dirichlet(omega[0, 0])
    z2 = -(sec.d3 @ chi)
    z3 = sec.d2 @ chi
    Z2 = z2[None, :] + grid.cumulative_x1(omega[2])
    Z3 = z3[None, :] - grid.cumulative_x1(omega[1])
    T2, T3 = sec.tangential_part(Z2, Z3)
    removed = float(max(np.abs(T2 - Z2).max(), np.abs(T3 - Z3).max()))
    divZ = grid.d2(T2) + grid.d3(T3)
    zeros = np.zeros(basis.n_modes)
    # the discrete divergence theorem holds only to truncation error, so the
    # zero-mode gap is absorbed and reported rather than rejected
    sol = solve_mode_odes(basis.lam, 1.0, basis.project(divZ), zeros, zeros, grid.x1, tol=np.inf)
    p2, p3 = basis.gradient(sol.a)
    V = np.stack([-basis.reconstruct(sol.da), T2 - p2, T3 - p3])
    return DivCurlResult(V, chi, removed, sol.solvability_gap)


def divcurl_residuals(V, omega, grid: Grid3) -> dict:
    scale = max(grid.l2_norm(omega[0]) + grid.l2_norm(omega[1]) + grid.l2_norm(omega[2]), 1e-300)
    div = grid.l2_norm(grid.divergence(V))
    curl = grid.curl(V) - omega
    return {"divergence": div / scale,
            "curl": sum(grid.l2_norm(c) for c in curl) / scale,
            "end_normal": float(max(np.abs(V[0, 0]).max(), np.abs(V[0, -1]).max())),
            "wall_normal": float(np.abs(grid.section.normal_component(V[1], V[2])).max())}


@dataclass
class VelocityStep:
    V: np.ndarray  # (3, N1, n) new V1, V2, V3
    kappa: float
    g1: np.ndarray
    g2: np.ndarray
    divcurl: DivCurlResult
    potential: PotentialResult


def step3_velocity(Vbar, omega, V4, V5, data: BoundaryData, gas: GasState, basis: EigenBasis, grid: Grid3) -> VelocityStep:
    dc = solve_divcurl(omega, grid, basis)
    F = assemble_F(Vbar, gas, grid)
    f_tilde = F + gas.mach2 * grid.d1(dc.V[0])
    g1, g2, kappa = assemble_boundary_g(Vbar, V4, V5, data, gas, grid, F=F)
    pot = solve_potential(f_tilde, g1, g2, kappa, gas, basis, grid)
    return VelocityStep(dc.V + pot.W, kappa, g1, g2, dc, pot)

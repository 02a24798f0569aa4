"""Fixed-point iteration for the steady flow and its audits.

One application of the scheme maps the previous perturbation Vbar to a new
one: transport B and K along w, solve for omega_1 and recover omega_2,3, then
rebuild the velocity.  The driver repeats this from Vbar = 0 until two
consecutive iterates agree in a discrete H^2 norm.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import BoundaryData
from .fields import Grid3, wall_tangency
from .gas import AdmissibilityError, GasState, density_map
from .geometry import EigenBasis
from .transport import AdvectionField, solve_scalar_transports
from .velocity import divcurl_residuals, step3_velocity
from .vorticity import vorticity_step

log = logging.getLogger(__name__)

COMPONENTS = ("V1", "V2", "V3", "V4", "V5")


@dataclass
class Controls:
    max_iter: int = 50
    tol: float = 1e-10
    atol: float = 1e-14
    delta: float | None = None
    sigma_max: float = 0.05
    audit_divcurl: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.atol < 0:
            raise ValueError("absolute tolerance must be non-negative")
        if not self.sigma_max > 0:
            raise ValueError("sigma_max must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass
class FlowState:
    """Perturbation V = (u1 - u, u2, u3, B - B, K - K) about the background."""

    grid: Grid3
    gas: GasState
    V: np.ndarray  # (5, N1, n)
    omega: np.ndarray | None = None
    iteration: int = 0

    @property
    def velocity(self) -> np.ndarray:
        return np.stack([self.gas.u + self.V[0], self.V[1], self.V[2]])

    @property
    def bernoulli(self) -> np.ndarray:
        return self.gas.B + self.V[3]

    @property
    def entropy(self) -> np.ndarray:
        return self.gas.K + self.V[4]

    @property
    def density(self) -> np.ndarray:
        u = self.velocity
        rho, _, _ = density_map(self.bernoulli, self.entropy, (u**2).sum(axis=0), self.gas.gamma)
        return rho

    @property
    def pressure(self) -> np.ndarray:
        return self.entropy * self.density**self.gas.gamma

    @property
    def mach2(self) -> np.ndarray:
        u = self.velocity
        _, _, m2 = density_map(self.bernoulli, self.entropy, (u**2).sum(axis=0), self.gas.gamma)
        return m2

    def mass_flux(self) -> np.ndarray:
        """int_Sigma rho u1 on every station."""
        return self.grid.integrate_section(self.density * self.velocity[0])

    def norm(self, k: int = 3) -> float:
        return sum(self.grid.sobolev_norm(v, k) for v in self.V)


@dataclass
class IterationRecord:
    iteration: int
    distance: float
    norm_h2: float
    norm_h3: float
    factor: float | None
    kappa: float
    divergence_residual: float
    divergence_bound: float
    divergence_ok: bool
    edge_tangency: float
    source_wall: float
    end_trace_h1: float
    wall_tangency: float
    projections: int
    max_projection: float
    solvability_gap: float
    min_axial_velocity: float
    max_mach2: float
    divcurl: dict = field(default_factory=dict)


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    records: list
    residuals: dict = field(default_factory=dict)
    kappa: float = 0.0
    delta: float = 0.0
    contraction: float | None = None
    mass_flux_variation: float = 0.0
    message: str = ""
    meta: dict = field(default_factory=dict)
    elapsed: float = 0.0  # wall-clock seconds, kept out of to_dict so reports are reproducible

    @property
    def residual(self) -> float:
        return float(sum(v for k, v in self.residuals.items() if k != "max"))

    def summary(self) -> str:
        state = "converged" if self.converged else "did not converge"
        return (f"{state} in {self.iterations} iterations, residual {self.residual:.3e}, "
                f"kappa {self.kappa:.3e}")

    @property
    def distances(self) -> list:
        return [r["distance"] for r in self.records]

    def to_dict(self, timing: bool = False) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("elapsed")
        out["residual"] = self.residual
        out["summary"] = self.summary()
        return out


@dataclass
class StepResult:
    V: np.ndarray
    omega: np.ndarray
    kappa: float
    vorticity: object
    velocity: object


def apply_scheme(Vbar: np.ndarray, data: BoundaryData, gas: GasState, grid: Grid3, basis: EigenBasis) -> StepResult:
    """One application of the iteration map to the previous perturbation."""
    sec = grid.section
    sig = data.sigma
    adv = AdvectionField.from_velocity(grid, Vbar, gas)
    B0, K0 = data.profile("B0", sec), data.profile("K0", sec)
    (V4, V5), _ = solve_scalar_transports(adv, [lambda a, b: sig * B0(a, b), lambda a, b: sig * K0(a, b)])
    vort = vorticity_step(Vbar, V4, V5, data.profile("J0", sec), sig, gas, grid)
    vel = step3_velocity(Vbar, vort.omega, V4, V5, data, gas, basis, grid)
    V = np.concatenate([vel.V, V4[None], V5[None]])
    return StepResult(V, vort.omega, vel.kappa, vort, vel)


def h2_distance(grid: Grid3, A: np.ndarray, B: np.ndarray) -> float:
    return sum(grid.sobolev_norm(a - b, 2) for a, b in zip(A, B))


def euler_residual(state: FlowState) -> dict:
    """L2 norms of the divergence-form steady Euler equations (mass, momentum, energy)."""
    grid, gas = state.grid, state.gas
    u = state.velocity
    rho = state.density
    P = state.pressure
    d = [grid.d1, grid.d2, grid.d3]
    mass = sum(d[j](rho * u[j]) for j in range(3))
    out = {"mass": grid.l2_norm(mass)}
    worst = np.abs(mass).max()
    for i in range(3):
        mom = sum(d[j](rho * u[j] * u[i] + (P if i == j else 0.0)) for j in range(3))
        out[f"momentum{i + 1}"] = grid.l2_norm(mom)
        worst = max(worst, np.abs(mom).max())
    energy = sum(d[j](rho * u[j] * state.bernoulli) for j in range(3))
    out["energy"] = grid.l2_norm(energy)
    out["max"] = float(max(worst, np.abs(energy).max()))
    return out


def fixed_point_residual(state: FlowState, data: BoundaryData, basis: EigenBasis) -> float:
    """H^2 distance moved by one more application of the scheme."""
    again = apply_scheme(state.V, data, state.gas, state.grid, basis).V
    return h2_distance(state.grid, again, state.V)


def boundary_reproduction(state: FlowState, data: BoundaryData) -> dict:
    """Largest nodal mismatch of the end-section data at a converged state.

    Inlet: rho u1, omega_1, B and K; outlet: rho u1.
    """
    sec, gas, sig = state.grid.section, state.gas, data.sigma
    flux = state.density * state.velocity[0]
    base = gas.rho * gas.u
    out = {
        "inlet_mass_flux": float(np.abs(flux[0] - base - sig * data.nodal("m0", sec)).max()),
        "outlet_mass_flux": float(np.abs(flux[-1] - base - sig * data.nodal("mL", sec)).max()),
        "inlet_bernoulli": float(np.abs(state.V[3, 0] - sig * data.nodal("B0", sec)).max()),
        "inlet_entropy": float(np.abs(state.V[4, 0] - sig * data.nodal("K0", sec)).max()),
    }
    if state.omega is not None:
        out["inlet_vorticity"] = float(np.abs(state.omega[0, 0] - sig * data.nodal("J0", sec)).max())
    return out


def contraction_probe(data: BoundaryData, gas: GasState, grid: Grid3, basis: EigenBasis, Vbar1, Vbar2):
    """Ratio ||J(V1) - J(V2)||_H2 / ||V1 - V2||_H2 (None if the inputs coincide)."""
    gap = h2_distance(grid, Vbar1, Vbar2)
    if gap == 0.0:
        return None
    a = apply_scheme(Vbar1, data, gas, grid, basis).V
    b = apply_scheme(Vbar2, data, gas, grid, basis).V
    return h2_distance(grid, a, b) / gap


def fixed_point_solve(data: BoundaryData, gas: GasState, grid: Grid3, basis: EigenBasis,
                      controls: Controls | None = None):
    """Iterate the scheme from zero; returns (FlowState, SolverReport)."""
    controls = controls or Controls()
    data.validate(grid.section)
    if data.sigma > controls.sigma_max:
        raise ValueError(f"sigma = {data.sigma:g} exceeds the configured sigma_max = {controls.sigma_max:g}")
    Vbar = np.zeros((5,) + grid.shape)
    records = []
    delta = controls.delta
    converged = False
    message = ""
    prev_dist = None
    step = None
    t_start = time.perf_counter()
    k = 0
    for k in range(1, controls.max_iter + 1):
        t0 = time.perf_counter()
        step = apply_scheme(Vbar, data, gas, grid, basis)
        V = step.V
        if not np.all(np.isfinite(V)):
            raise AdmissibilityError(f"iterate {k} is not finite")
        dist = h2_distance(grid, V, Vbar)
        norm2 = sum(grid.sobolev_norm(v, 2) for v in V)
        norm3 = sum(grid.sobolev_norm(v, 3) for v in V)
        if delta is None:
            delta = max(2.0 * norm3, 1e-12)
        u1 = gas.u + V[0]
        speed2 = u1**2 + V[1] ** 2 + V[2] ** 2
        _, _, mach2 = density_map(gas.B + V[3], gas.K + V[4], speed2, gas.gamma)
        vort = step.vorticity
        dc = divcurl_residuals(step.velocity.divcurl.V, step.omega, grid) if controls.audit_divcurl else {}
        rec = IterationRecord(
            iteration=k, distance=dist, norm_h2=norm2, norm_h3=norm3,
            factor=None if prev_dist in (None, 0.0) else dist / prev_dist,
            kappa=step.kappa,
            divergence_residual=vort.divergence_residual,
            divergence_bound=vort.divergence_bound,
            divergence_ok=bool(vort.divergence_ok),
            edge_tangency=vort.edge_tangency,
            source_wall=vort.source_wall,
            end_trace_h1=vort.end_trace_h1,
            wall_tangency=wall_tangency(grid, V),
            projections=vort.trace.projections,
            max_projection=vort.trace.max_distance,
            solvability_gap=step.velocity.potential.solvability_gap,
            min_axial_velocity=float(u1.min()),
            max_mach2=float(mach2.max()),
            divcurl=dc,
        )
        records.append(rec)
        log.info("iteration %d: distance %.3e, |V|_3 %.3e, kappa %.3e (%.2f s)", k, dist, norm3, step.kappa,
                 time.perf_counter() - t0)
        if norm3 > delta:
            message = f"iterate {k} left the ball of radius {delta:.3e} in H^3 (norm {norm3:.3e})"
            Vbar = V
            break
        prev_dist = dist
        Vbar = V
        if dist <= max(controls.tol * norm2, controls.atol):
            converged = True
            break
    state = FlowState(grid, gas, Vbar, step.omega if step else None, k)
    residuals = euler_residual(state)
    flux = state.mass_flux()
    report = SolverReport(
        converged=converged, iterations=k, records=[asdict(r) for r in records],
        residuals=residuals, kappa=records[-1].kappa if records else 0.0, delta=float(delta or 0.0),
        contraction=records[-1].factor if len(records) > 1 else None,
        mass_flux_variation=float((flux.max() - flux.min()) / abs(flux.mean())),
        message=message or ("converged" if converged else f"no convergence within {controls.max_iter} iterations"),
        meta={"gas": gas.as_dict(), "grid": grid.describe(),
              "modes": int(basis.n_modes), "boundary": data.describe()},
        elapsed=time.perf_counter() - t_start,
    )
    return state, report

"""Steady subsonic compressible Euler flow in a cylinder (0, L) x Sigma.

The solver iterates a linearised scheme: B and K are transported along the
cross-flow characteristics, the axial vorticity solves a damped transport
equation, the remaining vorticity components follow algebraically, and the
velocity is rebuilt from a div-curl part and a spectral potential.
"""
from .boundary import BoundaryData, Profile
from .config import ConfigError, RunConfig, load_config
from .driver import (Controls, FlowState, SolverReport, apply_scheme, boundary_reproduction, contraction_probe,
                     euler_residual, fixed_point_residual, fixed_point_solve)
from .fields import Grid3
from .gas import AdmissibilityError, GasState, density_map
from .geometry import (DiskSection, EigenBasis, MaskSection, RectangleSection, build_cross_section,
                       build_eigenbasis)

__all__ = [
    "AdmissibilityError", "BoundaryData", "ConfigError", "Controls", "DiskSection", "EigenBasis", "FlowState",
    "GasState", "Grid3", "MaskSection", "Profile", "RectangleSection", "RunConfig", "SolverReport",
    "apply_scheme", "boundary_reproduction", "build_cross_section", "build_eigenbasis", "contraction_probe",
    "density_map", "euler_residual", "fixed_point_residual", "fixed_point_solve", "load_config",
]
__version__ = "0.1.0"

"""Field export: one CSV per quantity, legacy VTK structured grids, JSON reports.

CSV rows are ``x1,x2,x3,value`` in slice-major node order, printed with 17
significant digits so a re-import reproduces every double exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import Grid3

CSV_HEADER = "x1,x2,x3,value"


def flow_fields(state) -> dict:
    """Named scalar fields of a FlowState, in export order."""
    u = state.velocity
    out = {
        "rho": state.density,
        "u1": u[0],
        "u2": u[1],
        "u3": u[2],
        "B": state.bernoulli,
        "K": state.entropy,
        "P": state.pressure,
        "mach2": state.mach2,
    }
    if state.omega is not None:
        for i in range(3):
            out[f"omega{i + 1}"] = state.omega[i]
    return out


def write_csv(grid: Grid3, values: np.ndarray, path) -> Path:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    x1, x2, x3 = grid.coordinates()
    table = np.column_stack([x1.ravel(), x2.ravel(), x3.ravel(), values.ravel()])
    path = Path(path)
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return path


def read_csv(path) -> tuple:
    """(coordinates (m, 3), values (m,)) from a file written by write_csv."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return table[:, :3], table[:, 3]


def _lattice_points(grid: Grid3) -> tuple:
    """Section lattice coordinates (A, B) and a flag marking real nodes."""
    sec = grid.section
    shape = sec.lattice_shape
    if sec.kind == "grid-mask":
        a = sec.origin[0] + (np.arange(shape[0]) + 0.5) * sec.h
        b = sec.origin[1] + (np.arange(shape[1]) + 0.5) * sec.h
        x2, x3 = np.meshgrid(a, b, indexing="ij")
        return x2, x3, sec.mask.astype(float)
    pts = sec.points.reshape(shape + (2,))
    return pts[..., 0], pts[..., 1], np.ones(shape)


def write_vtk(grid: Grid3, scalars: dict, vectors: dict, path, title: str = "steady flow") -> Path:
    """Legacy ASCII VTK STRUCTURED_GRID on the (section lattice) x (x1 stations) block.

    The disk is written on its polar lattice; a grid mask on its bounding
    lattice with an ``inside`` flag and outside cells filled from the nearest
    interior cell.
    """
    x2, x3, inside = _lattice_points(grid)
    na, nb = x2.shape
    n1 = grid.n1

    def order(f):  # (N1, A, B) lattice -> VTK order, first lattice index fastest
        return np.transpose(f, (0, 2, 1)).ravel()

    px1 = np.repeat(grid.x1, na * nb)
    px2 = np.tile(x2.T.ravel(), n1)
    px3 = np.tile(x3.T.ravel(), n1)
    npts = n1 * na * nb
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_GRID",
             f"DIMENSIONS {na} {nb} {n1}", f"POINTS {npts} double"]
    lines += [f"{a:.17g} {b:.17g} {c:.17g}" for a, b, c in zip(px1, px2, px3)]
    lines.append(f"POINT_DATA {npts}")
    data = dict(scalars)
    if grid.section.kind == "grid-mask":
        data["inside"] = np.broadcast_to(grid.section.mask, (n1,) + x2.shape)
    for name, f in data.items():
        f = np.asarray(f, dtype=float)
        lat = f if f.ndim == 3 else grid.to_lattice(f)
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in order(lat)]
    for name, v in vectors.items():
        comps = [order(grid.to_lattice(np.asarray(c, dtype=float))) for c in v]
        lines.append(f"VECTORS {name} double")
        lines += [f"{a:.17g} {b:.17g} {c:.17g}" for a, b, c in zip(*comps)]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if np.isfinite(val) else str(val)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_json(report, extra: dict | None = None) -> str:
    out = report.to_dict()
    if extra:
        out.update(extra)
    return json.dumps(_jsonable(out), indent=2, sort_keys=True)


def export_state(state, report, out_dir, vtk: bool = False, extra: dict | None = None) -> list:
    """Write fields_*.csv (and optionally fields_*.vtk) plus report.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fields = flow_fields(state)
    written = [write_csv(state.grid, f, out / f"fields_{name}.csv") for name, f in fields.items()]
    if vtk:
        vectors = {"velocity": state.velocity}
        if state.omega is not None:
            vectors["vorticity"] = state.omega
        written.append(write_vtk(state.grid, fields, vectors, out / "fields_flow.vtk"))
    path = out / "report.json"
    path.write_text(report_json(report, extra) + "\n")
    written.append(path)
    return written

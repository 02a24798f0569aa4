import json

import numpy as np

from subsonic_euler import Controls, DiskSection, Grid3, fixed_point_solve
from subsonic_euler.driver import FlowState
from subsonic_euler.export import export_state, flow_fields, read_csv, report_json, write_csv, write_vtk

from conftest import square_data


def _vtk_sections(text):
    lines = text.splitlines()
    return lines, {ln.split()[1]: i for i, ln in enumerate(lines) if ln.startswith(("SCALARS", "VECTORS"))}


def test_flow_fields_of_background(square17, gas):
    f = flow_fields(FlowState(square17, gas, np.zeros((5,) + square17.shape)))
    assert list(f)[:8] == ["rho", "u1", "u2", "u3", "B", "K", "P", "mach2"]
    assert np.allclose(f["rho"], gas.rho) and np.allclose(f["mach2"], gas.mach2)
    assert np.allclose(f["P"], gas.K * gas.rho**gas.gamma)


def test_csv_round_trip_on_disk(tmp_path):
    grid = Grid3(1.0, 9, DiskSection(1.0, 9, 16))
    x1, x2, x3 = grid.coordinates()
    f = np.exp(x1) * np.cos(3 * x2) + x3 / 3
    coords, vals = read_csv(write_csv(grid, f, tmp_path / "f.csv"))
    assert np.array_equal(vals, f.ravel())
    assert np.array_equal(coords[:, 1], x2.ravel())
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x1,x2,x3,value"


def test_vtk_layout(tmp_path, square17):
    x1, x2, x3 = square17.coordinates()
    path = write_vtk(square17, {"x2": x2}, {"pos": (x1, x2, x3)}, tmp_path / "f.vtk")
    lines, where = _vtk_sections(path.read_text())
    assert "DIMENSIONS 17 17 17" in lines
    npts = 17**3
    pts = np.array([ln.split() for ln in lines[6:6 + npts]], dtype=float)
    scal = np.array(lines[where["x2"] + 2:where["x2"] + 2 + npts], dtype=float)
    vec = np.array([ln.split() for ln in lines[where["pos"] + 1:where["pos"] + 1 + npts]], dtype=float)
    assert np.array_equal(scal, pts[:, 1])
    assert np.array_equal(vec, pts)


def test_export_state_and_report(tmp_path, square17, square17_basis, gas):
    state, report = fixed_point_solve(square_data(1e-3), gas, square17, square17_basis, Controls(max_iter=2))
    written = export_state(state, report, tmp_path, vtk=True, extra={"note": np.float64(1.5)})
    assert len(written) == 11 + 2
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["note"] == 1.5 and payload["iterations"] == 2
    assert json.loads(report_json(report)) == json.loads(report_json(report))
    _, vals = read_csv(tmp_path / "fields_omega1.csv")
    assert np.array_equal(vals, state.omega[0].ravel())

"""Command line entry point: ``subsonic-euler run CONFIG [options]``.

Exit status 0 when the iteration converges, 2 when it does not (or the
iterate leaves the admissible set), 1 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys

from .config import ConfigError, load_config, validate_run
from .driver import boundary_reproduction, fixed_point_solve
from .export import _jsonable, export_state
from .gas import AdmissibilityError
from .transport import TransportError

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2


def _grid(text: str):
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"grid must look like N1xN2xN3, got {text!r}")
    return tuple(int(g) for g in m.groups())


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subsonic-euler",
                                     description="Steady subsonic Euler flow in a duct by fixed-point iteration.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log iterations to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve the configured problem and export the fields")
    run.add_argument("config", help="INI file with [gas], [domain], [boundary] and [solver] sections")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--max-iter", type=_positive_int, help="iteration limit")
    run.add_argument("--tol", type=float, help="relative H^2 stopping tolerance")
    run.add_argument("--grid", type=_grid, help="N1xN2xN3 (disk: N1 x radial x angular)")
    run.add_argument("--modes", type=_positive_int, help="number of eigenmodes")
    run.add_argument("--report", choices=("json", "text"), default="text",
                     help="format of the report printed before the summary line")
    run.add_argument("--vtk", action="store_true", help="also write fields_flow.vtk")
    return parser


def _text_report(report) -> str:
    lines = [f"{'iter':>4} {'distance':>11} {'factor':>9} {'|V|_3':>11} {'kappa':>11} {'div(omega)':>11} {'edge':>9}"]
    for r in report.records:
        factor = "-" if r["factor"] is None else f"{r['factor']:.3e}"
        lines.append(f"{r['iteration']:>4} {r['distance']:>11.4e} {factor:>9} {r['norm_h3']:>11.4e} "
                     f"{r['kappa']:>11.3e} {r['divergence_residual']:>11.3e} {r['edge_tangency']:>9.2e}")
    res = ", ".join(f"{k} {v:.3e}" for k, v in report.residuals.items() if k != "max")
    lines.append(f"euler residuals: {res}")
    lines.append(f"mass flux variation {report.mass_flux_variation:.3e}; {report.message}")
    return "\n".join(lines)


def run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.grid:
            cfg.domain = cfg.domain.with_resolution(*args.grid)
        if args.modes:
            cfg.domain.modes = args.modes
        if args.max_iter:
            cfg.controls.max_iter = args.max_iter
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be positive")
            cfg.controls.tol = args.tol
        grid = cfg.build_grid()
        basis = cfg.build_basis(grid)
        validate_run(cfg, grid)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        state, report = fixed_point_solve(cfg.data, cfg.gas, grid, basis, cfg.controls)
    except (AdmissibilityError, TransportError) as exc:
        print(f"error: iteration failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    extra = {"config": {"domain": cfg.domain.describe(), "controls": vars(cfg.controls)},
             "boundary_reproduction": boundary_reproduction(state, cfg.data)}
    export_state(state, report, args.out, vtk=args.vtk or cfg.vtk, extra=extra)
    if args.report == "json":
        payload = report.to_dict()
        payload.update(extra)
        print(json.dumps(_jsonable(payload), sort_keys=True))
    else:
        print(_text_report(report))
    print(report.summary())
    if not report.converged:
        tail = ", ".join(f"{d:.3e}" for d in report.distances[-3:])
        print(f"no convergence: {report.message}; last distances {tail}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return run(args)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

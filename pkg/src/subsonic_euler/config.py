"""Run configuration files.

An INI file with four sections::

    [gas]       rho, u, K, gamma
    [domain]    kind (rectangle | disk | grid-mask), length, n1 and the section
                parameters: width, height, n2, n3 (rectangle); radius, n_r,
                n_theta (disk); mask_file, cell (grid-mask); basis, modes
    [boundary]  sigma, m0, mL, J0, B0, K0 (profile strings, see boundary.py)
    [solver]    max_iter, tol, atol, sigma_max, delta, audit_divcurl, vtk, eigen_cache

Unknown sections or keys are rejected, and every error names the line it
comes from.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boundary import PROFILE_NAMES, BoundaryData, Profile
from .driver import Controls
from .fields import Grid3
from .gas import GasState
from .geometry import EigenBasis, build_cross_section, build_eigenbasis


class ConfigError(ValueError):
    """Invalid configuration; the message carries the file and line."""


_KEYS = {
    "gas": {"rho": float, "u": float, "K": float, "gamma": float},
    "domain": {"kind": str, "length": float, "n1": int, "width": float, "height": float, "n2": int, "n3": int,
               "radius": float, "n_r": int, "n_theta": int, "mask_file": str, "cell": float,
               "basis": str, "modes": int},
    "boundary": {"sigma": float, **{name: str for name in PROFILE_NAMES}},
    "solver": {"max_iter": int, "tol": float, "atol": float, "sigma_max": float, "delta": float,
               "audit_divcurl": bool, "vtk": bool, "eigen_cache": str},
}
_SECTION_KEYS = {
    "rectangle": {"width", "height", "n2", "n3"},
    "disk": {"radius", "n_r", "n_theta"},
    "grid-mask": {"mask_file", "cell"},
}


@dataclass
class DomainSpec:
    kind: str = "rectangle"
    length: float = 1.0
    n1: int = 33
    params: dict = field(default_factory=dict)
    basis: str = "analytic"
    modes: int | None = None

    def section_params(self, base: Path | None = None) -> dict:
        p = dict(self.params)
        if self.kind == "rectangle":
            return {"width": p.get("width", 1.0), "height": p.get("height", 1.0),
                    "n2": p.get("n2", 33), "n3": p.get("n3", 33)}
        if self.kind == "disk":
            return {"radius": p.get("radius", 1.0), "n_r": p.get("n_r", 33), "n_theta": p.get("n_theta", 64)}
        if "mask_file" not in p:
            raise ValueError("grid-mask sections need mask_file")
        path = Path(p["mask_file"])
        if base is not None and not path.is_absolute():
            path = base / path
        mask = np.loadtxt(path, dtype=int, ndmin=2).astype(bool)
        return {"mask": mask, "h": p.get("cell", 1.0 / max(mask.shape))}

    def with_resolution(self, n1: int, n2: int, n3: int) -> "DomainSpec":
        """Copy with new node counts; on a disk n2, n3 are the radial and angular counts."""
        params = dict(self.params)
        if self.kind == "rectangle":
            params.update(n2=n2, n3=n3)
        elif self.kind == "disk":
            params.update(n_r=n2, n_theta=n3)
        else:
            raise ValueError("grid-mask resolution comes from the mask file")
        return DomainSpec(self.kind, self.length, n1, params, self.basis, self.modes)

    def describe(self) -> dict:
        return {"kind": self.kind, "length": self.length, "n1": self.n1, **self.params,
                "basis": self.basis, "modes": self.modes}


@dataclass
class RunConfig:
    gas: GasState
    data: BoundaryData
    domain: DomainSpec
    controls: Controls
    vtk: bool = False
    eigen_cache: str | None = None
    source: Path | None = None

    def build_grid(self) -> Grid3:
        base = self.source.parent if self.source else None
        section = build_cross_section(self.domain.kind, **self.domain.section_params(base))
        return Grid3(self.domain.length, self.domain.n1, section)

    def build_basis(self, grid: Grid3) -> EigenBasis:
        return build_eigenbasis(grid.section, self.domain.modes, self.domain.basis, cache_dir=self.eigen_cache)


def _line_index(text: str) -> dict:
    """(section, key) -> line number, and section -> header line number."""
    where = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            where[section] = no
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    where[(section, line.split(sep, 1)[0].strip())] = no
                    break
    return where


def _convert(kind, raw: str):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw.strip().strip('"').strip("'")


def load_config_text(text: str, name: str = "<config>", source: Path | None = None) -> RunConfig:
    where = _line_index(text)

    def fail(msg, section=None, key=None):
        no = where.get((section, key)) if key is not None else where.get(section)
        loc = f"{name}, line {no}" if no else name
        raise ConfigError(f"{loc}: {msg}")

    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (K vs k)
    try:
        parser.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{name}, line {exc.lineno}: key outside of any [section]") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"{name}, line {lineno}: cannot parse {exc.errors[0][1] if exc.errors else ''}") from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{name}, line {exc.lineno}: {exc.message.split(': ', 1)[-1]}") from exc

    values = {}
    for section in parser.sections():
        if section not in _KEYS:
            fail(f"unknown section [{section}]; expected {', '.join(f'[{s}]' for s in _KEYS)}", section)
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _KEYS[section]:
                fail(f"unknown key {key!r} in [{section}]", section, key)
            try:
                values[section][key] = _convert(_KEYS[section][key], raw)
            except ValueError as exc:
                fail(f"bad value for {key}: {exc}", section, key)
    for required in ("boundary",):
        if required not in values:
            raise ConfigError(f"{name}: missing section [{required}]")

    try:
        gas = GasState(**values.get("gas", {}))
    except ValueError as exc:
        fail(f"invalid gas state: {exc}", "gas")

    dom = dict(values.get("domain", {}))
    kind = dom.pop("kind", "rectangle")
    if kind not in _SECTION_KEYS:
        fail(f"unknown section kind {kind!r}; choose rectangle, disk or grid-mask", "domain", "kind")
    for key in list(dom):
        if key in ("length", "n1", "basis", "modes"):
            continue
        if key not in _SECTION_KEYS[kind]:
            fail(f"key {key!r} does not apply to a {kind} section", "domain", key)
    if dom.get("basis", "analytic") not in ("analytic", "fd"):
        fail("basis must be 'analytic' or 'fd'", "domain", "basis")
    domain = DomainSpec(kind, dom.pop("length", 1.0), dom.pop("n1", 33),
                        {k: v for k, v in dom.items() if k not in ("basis", "modes")},
                        dom.get("basis", "analytic"), dom.get("modes"))

    bnd = values["boundary"]
    if "sigma" not in bnd:
        fail("[boundary] needs sigma", "boundary")
    profiles = {}
    for pname in PROFILE_NAMES:
        if pname in bnd:
            try:
                profiles[pname] = Profile.parse(bnd[pname])
            except ValueError as exc:
                fail(str(exc), "boundary", pname)
    data = BoundaryData(bnd["sigma"], **profiles)

    sol = dict(values.get("solver", {}))
    vtk = sol.pop("vtk", False)
    cache = sol.pop("eigen_cache", None)
    try:
        controls = Controls(**sol)
    except ValueError as exc:
        fail(str(exc), "solver")
    return RunConfig(gas, data, domain, controls, vtk, cache, source)


def load_config(path) -> RunConfig:
    """Read and validate a run configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    return load_config_text(path.read_text(), str(path), path)


def validate_run(cfg: RunConfig, grid: Grid3) -> None:
    """Checks that need the discretised section: data compatibility and sigma bound."""
    try:
        cfg.data.validate(grid.section)
    except ValueError as exc:
        raise ConfigError(f"boundary data: {exc}") from exc
    if cfg.data.sigma > cfg.controls.sigma_max:
        raise ConfigError(f"sigma = {cfg.data.sigma:g} exceeds sigma_max = {cfg.controls.sigma_max:g}")

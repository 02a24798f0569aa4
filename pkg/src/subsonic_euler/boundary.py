"""Inlet/outlet data: named profile shapes and the boundary data bundle.

A profile is written as ``name(arg, key=value, ...)``, for example
``gaussian-bump(A=0.1, center=(0.5, 0.5), width=0.2, cutoff=6, d0=0.3)``.
``cutoff=q`` multiplies the shape by a ramp that vanishes identically within
d0/2 of the wall and is C^(q-1) where it turns on.

``sine-bump(A, p)`` is a broad analytic profile that vanishes to order p on
the wall by itself: (sin(pi x2/W) sin(pi x3/H))^p on a rectangle and
(1 - r^2/R^2)^p on a disk.  ``poly-bump(A, center, radius, p)`` is
A (1 - |x - c|^2 / radius^2)^p inside the disk of that radius and zero
outside, a compactly supported C^(p-1) profile.  ``smooth-bump(A, center,
radius)`` is the infinitely smooth A exp(1 - 1/(1 - |x - c|^2 / radius^2)).
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .geometry import CrossSection, DiskSection, RectangleSection, bessel_neumann_roots

SHAPES = ("zero", "constant", "gaussian-bump", "cosine-mode", "ring", "sine-bump", "poly-bump", "smooth-bump")
_POSITIONAL = {"constant": ("A",), "cosine-mode": ("j", "k", "A"), "gaussian-bump": ("A",), "ring": ("A",), "sine-bump": ("A", "p"), "poly-bump": ("A",), "smooth-bump": ("A",)}
_ALLOWED = {
    "zero": set(),
    "constant": {"A"},
    "gaussian-bump": {"A", "center", "width"},
    "cosine-mode": {"j", "k", "A"},
    "ring": {"A", "radius", "width", "center"},
    "sine-bump": {"A", "p"},
    "poly-bump": {"A", "center", "radius", "p"},
    "smooth-bump": {"A", "center", "radius"},
}


def _centre(section: CrossSection):
    if isinstance(section, RectangleSection):
        return 0.5 * section.width, 0.5 * section.height
    if isinstance(section, DiskSection):
        return 0.0, 0.0
    return tuple(section.points.mean(axis=0))


@dataclass(frozen=True)
class Profile:
    shape: str = "zero"
    params: dict = field(default_factory=dict)
    cutoff: int = 0
    d0: float = 0.2

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown profile shape {self.shape!r}; choose from {', '.join(SHAPES)}")
        extra = set(self.params) - _ALLOWED[self.shape]
        if extra:
            raise ValueError(f"profile {self.shape!r} does not accept {sorted(extra)}")
        if self.cutoff < 0:
            raise ValueError("cutoff order must be non-negative")
        if self.d0 <= 0:
            raise ValueError("cutoff width d0 must be positive")

    @classmethod
    def parse(cls, text: str) -> "Profile":
        text = text.strip()
        if "(" not in text:
            name, body = text, ""
        else:
            if not text.endswith(")"):
                raise ValueError(f"malformed profile {text!r}")
            name, body = text.split("(", 1)
            body = body[:-1]
        name = name.strip()
        try:
            call = ast.parse(f"f({body})", mode="eval").body
            args = [ast.literal_eval(a) for a in call.args]
            kwargs = {kw.arg: ast.literal_eval(kw.value) for kw in call.keywords}
        except (SyntaxError, ValueError) as exc:
            raise ValueError(f"cannot parse profile arguments in {text!r}") from exc
        if name not in SHAPES:
            raise ValueError(f"unknown profile shape {name!r}; choose from {', '.join(SHAPES)}")
        names = _POSITIONAL.get(name, ())
        if len(args) > len(names):
            raise ValueError(f"too many positional arguments for {name!r}")
        for key, val in zip(names, args):
            kwargs[key] = val
        cutoff = int(kwargs.pop("cutoff", 0))
        d0 = float(kwargs.pop("d0", 0.2))
        return cls(name, kwargs, cutoff, d0)

    def describe(self) -> str:
        items = [f"{k}={v!r}" for k, v in self.params.items()]
        if self.cutoff:
            items += [f"cutoff={self.cutoff}", f"d0={self.d0!r}"]
        return f"{self.shape}({', '.join(items)})"

    @property
    def wall_order(self) -> int:
        """Order to which the profile vanishes on the wall."""
        own = 0
        if self.shape == "sine-bump":
            own = int(self.params.get("p", 4))
        elif self.shape == "poly-bump":
            own = int(self.params.get("p", 6))
        elif self.shape == "smooth-bump":
            own = 99
        return max(own, self.cutoff)

    @property
    def is_zero(self) -> bool:
        return self.shape == "zero" or float(self.params.get("A", 1.0)) == 0.0

    def bind(self, section: CrossSection):
        """Callable (x2, x3) -> values on this section."""
        p = self.params
        amp = float(p.get("A", 1.0))
        shape = self.shape
        if shape == "cosine-mode":
            j, k = int(p.get("j", 0)), int(p.get("k", 0))
            if j < 0 or k < 0:
                raise ValueError("cosine-mode indices must be non-negative")
        c2, c3 = _centre(section)
        p_exp = int(p.get("p", 4))

        def base(x2, x3):
            x2 = np.asarray(x2, dtype=float)
            x3 = np.asarray(x3, dtype=float)
            if shape == "zero":
                return np.zeros(np.broadcast(x2, x3).shape)
            if shape == "constant":
                return amp * np.ones(np.broadcast(x2, x3).shape)
            if shape == "gaussian-bump":
                cx, cy = p.get("center", (c2, c3))
                w = float(p.get("width", 0.2))
                return amp * np.exp(-((x2 - cx) ** 2 + (x3 - cy) ** 2) / w**2)
            if shape == "ring":
                cx, cy = p.get("center", (c2, c3))
                r0, w = float(p.get("radius", 0.3)), float(p.get("width", 0.1))
                return amp * np.exp(-((np.hypot(x2 - cx, x3 - cy) - r0) / w) ** 2)
            if shape == "poly-bump":
                cx, cy = p.get("center", (c2, c3))
                rad = float(p.get("radius", 0.25))
                rho2 = ((x2 - cx) ** 2 + (x3 - cy) ** 2) / rad**2
                return amp * np.clip(1.0 - rho2, 0, None) ** int(p.get("p", 6))
            if shape == "smooth-bump":
                cx, cy = p.get("center", (c2, c3))
                rad = float(p.get("radius", 0.25))
                rho2 = ((x2 - cx) ** 2 + (x3 - cy) ** 2) / rad**2
                inside = rho2 < 1.0
                out = np.zeros(np.broadcast(x2, x3).shape)
                out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
                return out
            if shape == "sine-bump":
                if isinstance(section, RectangleSection):
                    s2 = np.sin(np.pi * x2 / section.width)
                    s3 = np.sin(np.pi * x3 / section.height)
                    return amp * (np.clip(s2, 0, None) * np.clip(s3, 0, None)) ** p_exp
                if isinstance(section, DiskSection):
                    return amp * np.clip(1.0 - (x2**2 + x3**2) / section.radius**2, 0, None) ** p_exp
                raise ValueError("sine-bump is defined on rectangle and disk sections")
            # cosine-mode
            if isinstance(section, RectangleSection):
                return amp * np.cos(j * np.pi * x2 / section.width) * np.cos(k * np.pi * x3 / section.height)
            if isinstance(section, DiskSection):
                r = np.hypot(x2, x3) / section.radius
                th = np.arctan2(x3, x2)
                if k == 0:
                    if j > 0:
                        raise ValueError("disk cosine-mode needs k >= 1 when j > 0")
                    radial = np.ones_like(r)
                else:
                    root = bessel_neumann_roots(j, k)[-1]
                    radial = special.jv(j, root * r)
                return amp * radial * np.cos(j * th)
            raise ValueError("cosine-mode is defined on rectangle and disk sections")

        q, d0 = self.cutoff, self.d0

        def profile(x2, x3):
            out = base(x2, x3)
            if q > 0:
                out = out * section.cutoff(x2, x3, q, d0)
            return out

        return profile


PROFILE_NAMES = ("m0", "mL", "J0", "B0", "K0")
MIN_CUTOFF = {"J0": 2, "B0": 3, "K0": 3}


@dataclass
class BoundaryData:
    """Amplitude sigma and the five profile shapes of the inlet/outlet data."""

    sigma: float
    m0: Profile = field(default_factory=Profile)
    mL: Profile = field(default_factory=Profile)
    J0: Profile = field(default_factory=Profile)
    B0: Profile = field(default_factory=Profile)
    K0: Profile = field(default_factory=Profile)

    def profile(self, name: str, section: CrossSection):
        return getattr(self, name).bind(section)

    def nodal(self, name: str, section: CrossSection) -> np.ndarray:
        pts = section.points
        return self.profile(name, section)(pts[:, 0], pts[:, 1])

    def describe(self) -> dict:
        out = {"sigma": self.sigma}
        out.update({k: getattr(self, k).describe() for k in PROFILE_NAMES})
        return out

    def validate(self, section: CrossSection, tol: float = 1e-10) -> None:
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be a finite non-negative number")
        values = {}
        for name in PROFILE_NAMES:
            v = self.nodal(name, section)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"profile {name} produced non-finite values")
            values[name] = v
        for name, q in MIN_CUTOFF.items():
            prof = getattr(self, name)
            if not prof.is_zero and prof.wall_order < q:
                raise ValueError(f"profile {name} must vanish near the wall: use cutoff >= {q}")
        m0, mL = values["m0"], values["mL"]
        gap = abs(section.integrate(m0 - mL))
        scale = section.area * max(np.abs(m0).max(), np.abs(mL).max(), 1e-300)
        if gap > tol * scale:
            raise ValueError(f"m0 and mL carry different total mass flux (|int(m0 - mL)| = {gap:.3e})")

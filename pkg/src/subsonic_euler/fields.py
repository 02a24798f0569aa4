"""Tensor grid on (0, L) x Sigma, difference operators, norms and interpolation.

Fields are plain arrays of shape (N1, n_nodes): slice k holds the values on
the cross section at x1 = k h1.  Vector fields stack three of them.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from . import _fd, _kernels
from .geometry import CrossSection


class Grid3:
    """Uniform x1 stations times the nodes of a cross section."""

    def __init__(self, length: float, n1: int, section: CrossSection):
        if length <= 0:
            raise ValueError("duct length must be positive")
        if n1 < 9:
            raise ValueError("need at least 9 stations along x1")
        self.length = float(length)
        self.n1 = int(n1)
        self.section = section
        self.x1 = np.linspace(0.0, length, n1)
        self.h1 = self.x1[1]
        self._d1 = _fd.diff_matrix(n1, self.h1).toarray()
        self._d1_low = _fd.diff_matrix(n1, self.h1, order=2).toarray()
        self.cumulative = _fd.cumulative_weights(n1, self.h1)
        self.w1 = self.cumulative[-1].copy()

    @property
    def shape(self) -> tuple:
        return (self.n1, self.section.n_nodes)

    @property
    def spacing(self) -> float:
        return min(self.h1, self.section.spacing)

    def describe(self) -> dict:
        return {"length": self.length, "n1": self.n1, "section": self.section.describe()}

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def coordinates(self) -> tuple:
        """Nodal x1, x2, x3 as (N1, n) arrays."""
        pts = self.section.points
        x1 = np.repeat(self.x1[:, None], pts.shape[0], axis=1)
        return x1, np.broadcast_to(pts[:, 0], self.shape).copy(), np.broadcast_to(pts[:, 1], self.shape).copy()

    def evaluate(self, func) -> np.ndarray:
        return np.asarray(func(*self.coordinates()), dtype=float) * np.ones(self.shape)

    # derivatives -------------------------------------------------------------
    def derivative(self, f: np.ndarray, axis: int, order: int = 4, even: bool = False) -> np.ndarray:
        """Partial derivative along x1 (axis 1), x2 (axis 2) or x3 (axis 3).

        ``even`` closes the section stencils by mirroring at the wall, for
        fields whose normal derivative vanishes there.
        """
        sec = self.section
        if axis == 1:
            return (self._d1 if order == 4 else self._d1_low) @ f
        if axis == 2:
            mat = sec.d2_even if even else (sec.d2 if order == 4 else sec.d2_low)
        elif axis == 3:
            mat = sec.d3_even if even else (sec.d3 if order == 4 else sec.d3_low)
        else:
            raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
        return (mat @ f.T).T

    def d1(self, f):
        return self.derivative(f, 1)

    def d2(self, f):
        return self.derivative(f, 2)

    def d3(self, f):
        return self.derivative(f, 3)

    def gradient(self, f) -> np.ndarray:
        return np.stack([self.d1(f), self.d2(f), self.d3(f)])

    def divergence(self, v, order: int = 4) -> np.ndarray:
        return sum(self.derivative(v[i], i + 1, order) for i in range(3))

    def curl(self, v) -> np.ndarray:
        return np.stack([
            self.d2(v[2]) - self.d3(v[1]),
            self.d3(v[0]) - self.d1(v[2]),
            self.d1(v[1]) - self.d2(v[0]),
        ])

    def cumulative_x1(self, f: np.ndarray) -> np.ndarray:
        """int_0^{x1} f along each line of constant (x2, x3)."""
        return self.cumulative @ f

    # quadrature and norms -------------------------------------------------------
    def integrate(self, f: np.ndarray) -> float:
        return float(self.w1 @ f @ self.section.weights)

    def integrate_section(self, f: np.ndarray) -> np.ndarray:
        return f @ self.section.weights

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.integrate(f * f), 0.0)))

    def derivative_table(self, f: np.ndarray, k: int) -> dict:
        """All mixed derivatives d1^a d2^b d3^c f with a + b + c <= k."""
        table = {(0, 0, 0): f}
        for total in range(1, k + 1):
            for a, b, c in product(range(total + 1), repeat=3):
                if a + b + c != total:
                    continue
                if a > 0:
                    table[(a, b, c)] = self.d1(table[(a - 1, b, c)])
                elif b > 0:
                    table[(a, b, c)] = self.d2(table[(a, b - 1, c)])
                else:
                    table[(a, b, c)] = self.d3(table[(a, b, c - 1)])
        return table

    def sobolev_norm(self, f: np.ndarray, k: int) -> float:
        """Discrete H^k norm: square root of the summed L2 norms of all derivatives up to order k."""
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        if k < 0:
            raise ValueError("Sobolev order must be non-negative")
        if not np.all(np.isfinite(f)):
            raise ValueError("field contains non-finite values")
        table = self.derivative_table(f, k)
        return float(np.sqrt(sum(self.integrate(g * g) for g in table.values())))

    # interpolation --------------------------------------------------------------
    def to_lattice(self, f: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(self.section.to_lattice(f))

    def interpolate(self, f: np.ndarray, points, snap: float | None = None) -> np.ndarray:
        """Evaluate a nodal field at arbitrary points (m, 3) inside the duct.

        Points up to ``snap`` outside the domain are moved onto the wall;
        anything further out is an error.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        sec = self.section
        if snap is None:
            snap = 1e-9 * max(self.length, 1.0)
        x1 = pts[:, 0]
        if np.any(x1 < -snap) or np.any(x1 > self.length + snap):
            raise ValueError("interpolation point outside the duct along x1")
        x1 = np.clip(x1, 0.0, self.length)
        x2, x3 = pts[:, 1].copy(), pts[:, 2].copy()
        for p in range(len(x2)):
            y2, y3, dist = _kernels._project(sec.kind_code, sec.geo, sec.inside, sec.near_i, sec.near_j,
                                             x2[p], x3[p])
            if dist > snap:
                raise ValueError(f"interpolation point {pts[p].tolist()} lies outside the cross section")
            x2[p], x3[p] = y2, y3
        data = self.to_lattice(f)
        return _kernels.interpolate_points(sec.kind_code, sec.geo, data, self.h1, x1, x2, x3)


def wall_tangency(grid: Grid3, v) -> float:
    """Largest |n . v'| on the duct wall."""
    return float(np.abs(grid.section.normal_component(v[1], v[2])).max())

"""Neumann boundary value problems for the modal coefficients.

Each coefficient a_n of an eigen-expansion satisfies

    coef * a'' - lam * a = f,    a'(0) = b1,  a'(L) = b2

on a uniform x1 grid.  The zero mode (lam = 0) is integrated twice and
normalised to zero mean.  Other modes split into a closed-form part d that
carries the boundary data and a part c with homogeneous data, solved with a
fourth-order compact (Numerov-type) tridiagonal scheme.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd


def closed_form_d(lam_t: np.ndarray, length: float, b1, b2, x: np.ndarray):
    """Solution of d'' = lam_t d, d'(0) = b1, d'(L) = b2, and its derivative.

    Written with decaying exponentials only, so large sqrt(lam_t) L does not
    overflow.  Shapes: lam_t, b1, b2 (M,); x (N,); output (N, M).
    """
    a = np.sqrt(np.asarray(lam_t, dtype=float))[None, :]
    x = np.asarray(x, dtype=float)[:, None]
    denom = -np.expm1(-2.0 * a * length)

    def cosh_ratio(y):  # cosh(a y) / sinh(a L)
        return (np.exp(-a * (length - y)) + np.exp(-a * (length + y))) / denom

    def sinh_ratio(y):  # sinh(a y) / sinh(a L)
        return (np.exp(-a * (length - y)) - np.exp(-a * (length + y))) / denom

    b1 = np.asarray(b1, dtype=float)[None, :]
    b2 = np.asarray(b2, dtype=float)[None, :]
    d = (-b1 * cosh_ratio(length - x) + b2 * cosh_ratio(x)) / a
    dd = b1 * sinh_ratio(length - x) + b2 * sinh_ratio(x)
    return d, dd


def solve_homogeneous_c(lam_t: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order solution of c'' - lam_t c = g with c'(0) = c'(L) = 0.

    g has shape (N, M).  Ghost values come from the Taylor expansion with
    c''' = g' at the ends.
    """
    n, m = g.shape
    lt = np.broadcast_to(np.asarray(lam_t, dtype=float), (m,))
    d1 = _fd.diff_matrix(n, h)
    d2 = _fd.diff_matrix(n, h, deriv=2, order=2)
    gp = d1 @ g
    gpp = d2 @ g
    corr = h * h / 12.0
    rhs = g + corr * (lt * g + gpp)
    rhs[0] += h / 3.0 * gp[0]
    rhs[-1] -= h / 3.0 * gp[-1]
    diag = np.broadcast_to(-2.0 / h**2 - lt - corr * lt**2, (n, m)).copy()
    lower = np.full((n, m), 1.0 / h**2)
    upper = np.full((n, m), 1.0 / h**2)
    upper[0] = 2.0 / h**2
    lower[-1] = 2.0 / h**2
    lower[0] = 0.0
    upper[-1] = 0.0
    return _fd.solve_tridiagonal(lower, diag, upper, rhs)


@dataclass
class ModeSolution:
    a: np.ndarray  # (N, M)
    da: np.ndarray  # (N, M)
    solvability_gap: float  # zero-mode mismatch absorbed into its source


def solve_mode_odes(lam, coef: float, f, b1, b2, x1: np.ndarray, tol: float = 1e-6) -> ModeSolution:
    """Solve all modal problems at once.

    lam (M,), f (N, M), b1, b2 (M,).  Any mode with lam == 0 must satisfy
    b2 - b1 = int_0^L f / coef; a discrepancy up to ``tol`` times the data
    scale is attributed to quadrature and spread uniformly over the source.
    """
    lam = np.asarray(lam, dtype=float)
    f = np.asarray(f, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if np.any(lam < 0):
        raise ValueError("eigenvalues must be non-negative")
    if coef <= 0:
        raise ValueError("leading coefficient must be positive")
    n = x1.size
    h = x1[1] - x1[0]
    length = x1[-1] - x1[0]
    cum = _fd.cumulative_weights(n, h)
    a = np.zeros_like(f)
    da = np.zeros_like(f)
    gap = 0.0
    zero = lam == 0.0
    if np.any(zero):
        g0 = f[:, zero] / coef
        total = cum[-1] @ g0
        mismatch = b2[zero] - b1[zero] - total
        scale = (np.abs(b1).max() + np.abs(b2).max() + np.abs(total)
                 + length * np.abs(f).max() / coef)
        gap = float(np.max(np.abs(mismatch)))
        if np.isfinite(tol) and np.any(np.abs(mismatch) > tol * scale + 1e-14):
            raise ValueError(f"zero mode violates solvability (gap {gap:.3e})")
        g0 = g0 + mismatch / length
        d0 = b1[zero] + cum @ g0
        a0 = cum @ d0
        a0 -= (cum[-1] @ a0) / length
        a[:, zero], da[:, zero] = a0, d0
    rest = ~zero
    if np.any(rest):
        lt = lam[rest] / coef
        g = f[:, rest] / coef
        d, dd = closed_form_d(lt, length, b1[rest], b2[rest], x1 - x1[0])
        c = solve_homogeneous_c(lt, g, h)
        dc = _fd.diff_matrix(n, h) @ c
        dc[[0, -1]] = 0.0
        a[:, rest], da[:, rest] = c + d, dc + dd
    return ModeSolution(a, da, gap)


@dataclass
class ModeODE:
    """A single modal problem coef * a'' - lam * a = f with Neumann data (b1, b2)."""

    lam: float
    coef: float
    f: np.ndarray
    b1: float
    b2: float
    x1: np.ndarray

    def solve(self):
        sol = solve_mode_odes(np.array([self.lam]), self.coef, np.asarray(self.f)[:, None],
                              np.array([self.b1]), np.array([self.b2]), self.x1)
        return sol.a[:, 0], sol.da[:, 0]

    def residual(self, a: np.ndarray) -> float:
        """Max interior residual of the ODE using fourth-order differences."""
        h = self.x1[1] - self.x1[0]
        d2 = _fd.diff_matrix(self.x1.size, h, deriv=2) @ a
        return float(np.abs(self.coef * d2 - self.lam * a - self.f)[2:-2].max())

"""One-dimensional stencils, difference matrices and quadrature on uniform grids."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp


def fd_weights(offsets, deriv: int) -> np.ndarray:
    """Weights w with sum_j w_j f(offsets_j) ~ f^(deriv)(0) for unit spacing."""
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = np.prod(np.arange(1, deriv + 1))
    return np.linalg.solve(vander, rhs)


@lru_cache(maxsize=None)
def _stencil_rows(n: int, deriv: int, order: int, even: bool = False) -> tuple:
    """Per-row (columns, weights) for a non-periodic grid of n nodes.

    With ``even`` the stencils stay centred and the ghost values are the
    mirror images about the end nodes, which imposes f' = 0 there.
    """
    half = (deriv + order - 1) // 2
    size = min(deriv + order, n)
    rows = []
    for i in range(n):
        if even:
            offs = np.arange(-half, half + 1)
            cols = np.abs(i + offs)
            cols = np.where(cols > n - 1, 2 * (n - 1) - cols, cols)
            w = fd_weights(offs, deriv)
            w = 0.5 * (w + (-1) ** deriv * w[::-1])  # exact (anti)symmetry so mirrored terms cancel
            rows.append((cols, w))
            continue
        if i - half >= 0 and i + half <= n - 1:
            cols = np.arange(i - half, i + half + 1)
        else:
            start = 0 if i - half < 0 else n - size
            cols = np.arange(start, start + size)
        rows.append((cols, fd_weights(cols - i, deriv)))
    return tuple(rows)


def diff_matrix(n: int, h: float, deriv: int = 1, order: int = 4, even: bool = False) -> sp.csr_matrix:
    """Sparse difference matrix, centred inside and one-sided (or mirrored) at the ends."""
    if n < order + 2:
        raise ValueError(f"need at least {order + 2} nodes for order {order}, got {n}")
    indptr = [0]
    indices = []
    data = []
    for cols, w in _stencil_rows(n, deriv, order, even):
        indices.extend(cols)
        data.extend(w)
        indptr.append(len(indices))
    mat = sp.csr_matrix((np.array(data) / h**deriv, indices, indptr), shape=(n, n))
    mat.sum_duplicates()
    return mat


def periodic_spectral_diff(n: int, length: float, deriv: int = 1) -> np.ndarray:
    """Dense Fourier differentiation matrix on n equispaced periodic nodes."""
    k = np.fft.fftfreq(n, d=1.0 / n) * (2 * np.pi / length)
    if n % 2 == 0 and deriv % 2 == 1:
        k[n // 2] = 0.0
    sym = (1j * k) ** deriv
    eye = np.eye(n)
    return np.real(np.fft.ifft(sym[:, None] * np.fft.fft(eye, axis=0), axis=0))


def cumulative_weights(n: int, h: float) -> np.ndarray:
    """Matrix C with (C f)_k ~ int_0^{x_k} f, fourth order.

    Each cell [x_i, x_{i+1}] integrates the cubic through four neighbouring
    nodes; cells next to the ends use a shifted stencil.
    """
    if n < 4:
        raise ValueError("cumulative integration needs at least 4 nodes")
    cells = np.zeros((n - 1, n))
    inner = h * np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0
    edge = h * np.array([9.0, 19.0, -5.0, 1.0]) / 24.0
    for i in range(n - 1):
        if i == 0:
            cells[i, 0:4] = edge
        elif i == n - 2:
            cells[i, n - 4:n] = edge[::-1]
        else:
            cells[i, i - 1:i + 3] = inner
    out = np.zeros((n, n))
    out[1:] = np.cumsum(cells, axis=0)
    return out


def quadrature_weights(n: int, h: float) -> np.ndarray:
    """Fourth-order composite weights; equal to the last row of the cumulative rule."""
    return cumulative_weights(n, h)[-1].copy()


def lagrange_weights(nodes: np.ndarray, x: float) -> np.ndarray:
    w = np.ones(len(nodes))
    for j, xj in enumerate(nodes):
        for m, xm in enumerate(nodes):
            if m != j:
                w[j] *= (x - xm) / (xj - xm)
    return w


def refine_matrix(n: int, factor: int) -> np.ndarray:
    """Cubic Lagrange prolongation from n nodes to factor*(n-1)+1 nodes."""
    m = factor * (n - 1) + 1
    out = np.zeros((m, n))
    for i in range(m):
        s = i / factor
        if i % factor == 0:
            out[i, i // factor] = 1.0
            continue
        j0 = min(max(int(np.floor(s)) - 1, 0), n - 4)
        out[i, j0:j0 + 4] = lagrange_weights(np.arange(j0, j0 + 4, dtype=float), s)
    return out


def solve_tridiagonal(lower, diag, upper, rhs):
    """Batched Thomas algorithm along axis 0.

    lower[i] couples row i to i-1, upper[i] couples row i to i+1. All arrays
    have shape (n, batch).
    """
    n = diag.shape[0]
    cp = np.empty_like(diag)
    dp = np.empty_like(rhs)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x = np.empty_like(rhs)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x

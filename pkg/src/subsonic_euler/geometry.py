"""Cross sections of the duct and their Neumann Laplacian eigenbases.

Three section kinds are supported:

* ``rectangle``: nodal tensor grid on [0, W] x [0, H] including the walls.
* ``disk``: polar grid on the disk of radius R centred at the origin.  Radial
  nodes sit at r_j = (j + 1/2) dr with the last one on the wall, so the
  centre is never a node and the reflection (-r, theta) = (r, theta + pi)
  closes stencils there.
* ``grid-mask``: cell-centred cells of a boolean mask (experimental).

Every section exposes nodes, quadrature weights, wall nodes with outward
normals, sparse fourth-order derivative matrices and the data needed by the
compiled interpolation kernels.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage, special

from . import _fd

KIND_CODES = {"rectangle": 0, "disk": 1, "grid-mask": 2}


def smoothstep(s: np.ndarray, q: int) -> np.ndarray:
    """Polynomial ramp from 0 to 1 on [0, 1] whose first q-1 derivatives vanish at both ends."""
    s = np.clip(s, 0.0, 1.0)
    if q <= 0:
        return np.ones_like(s)
    total = np.zeros_like(s)
    for k in range(q):
        total += special.comb(q - 1 + k, k) * (1.0 - s) ** k
    return s**q * total


def wall_cutoff(d: np.ndarray, q: int, d0: float) -> np.ndarray:
    """Zero within d0/2 of the wall, one beyond d0, smooth ramp in between."""
    if q <= 0:
        return np.ones_like(d)
    return smoothstep((d - 0.5 * d0) / (0.5 * d0), q)


class CrossSection:
    """Common interface; see the concrete subclasses."""

    kind: str
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    boundary: np.ndarray  # indices of wall nodes
    normals: np.ndarray  # (nb, 2) outward unit normals at wall nodes
    d2: sp.csr_matrix
    d3: sp.csr_matrix
    d2_low: sp.csr_matrix  # second order, used for error estimates
    d3_low: sp.csr_matrix
    d2_even: sp.csr_matrix  # wall stencils closed by mirroring, for fields with zero normal derivative
    d3_even: sp.csr_matrix
    spacing: float

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return f @ self.weights

    def normal_component(self, v2: np.ndarray, v3: np.ndarray) -> np.ndarray:
        """n . v at the wall nodes (last axis is the node axis)."""
        b = self.boundary
        return v2[..., b] * self.normals[:, 0] + v3[..., b] * self.normals[:, 1]

    def cutoff(self, x2, x3, q: int, d0: float) -> np.ndarray:
        return wall_cutoff(self.wall_distance(x2, x3), q, d0)

    # kernel support -------------------------------------------------------
    @property
    def kind_code(self) -> int:
        return KIND_CODES[self.kind]

    def to_lattice(self, f: np.ndarray) -> np.ndarray:
        """Reshape node data (..., n) onto the interpolation lattice."""
        return f.reshape(f.shape[:-1] + self.lattice_shape)


# ---------------------------------------------------------------------------
# rectangle


class RectangleSection(CrossSection):
    kind = "rectangle"

    def __init__(self, width: float = 1.0, height: float = 1.0, n2: int = 33, n3: int = 33):
        if width <= 0 or height <= 0:
            raise ValueError("rectangle sides must be positive")
        if n2 < 8 or n3 < 8:
            raise ValueError("rectangle needs at least 8 nodes per direction")
        self.width, self.height, self.n2, self.n3 = float(width), float(height), n2, n3
        self.x2 = np.linspace(0.0, width, n2)
        self.x3 = np.linspace(0.0, height, n3)
        self.h2, self.h3 = self.x2[1], self.x3[1]
        g2, g3 = np.meshgrid(self.x2, self.x3, indexing="ij")
        self.points = np.column_stack([g2.ravel(), g3.ravel()])
        self.w2 = np.full(n2, self.h2)
        self.w2[[0, -1]] *= 0.5
        self.w3 = np.full(n3, self.h3)
        self.w3[[0, -1]] *= 0.5
        self.weights = np.outer(self.w2, self.w3).ravel()
        self.lattice_shape = (n2, n3)
        self.spacing = min(self.h2, self.h3)

        i, j = np.divmod(np.arange(n2 * n3), n3)
        on2 = (i == 0) | (i == n2 - 1)
        on3 = (j == 0) | (j == n3 - 1)
        self.boundary = np.flatnonzero(on2 | on3)
        nrm = np.zeros((self.boundary.size, 2))
        bi, bj = i[self.boundary], j[self.boundary]
        nrm[:, 0] = np.where(bi == 0, -1.0, np.where(bi == n2 - 1, 1.0, 0.0))
        nrm[:, 1] = np.where(bj == 0, -1.0, np.where(bj == n3 - 1, 1.0, 0.0))
        self.normals = nrm / np.linalg.norm(nrm, axis=1)[:, None]
        self._wall2 = on2
        self._wall3 = on3

        eye2, eye3 = sp.identity(n2, format="csr"), sp.identity(n3, format="csr")
        self.d2 = sp.kron(_fd.diff_matrix(n2, self.h2), eye3, format="csr")
        self.d3 = sp.kron(eye2, _fd.diff_matrix(n3, self.h3), format="csr")
        self.d2_low = sp.kron(_fd.diff_matrix(n2, self.h2, order=2), eye3, format="csr")
        self.d3_low = sp.kron(eye2, _fd.diff_matrix(n3, self.h3, order=2), format="csr")
        self.d2_even = sp.kron(_fd.diff_matrix(n2, self.h2, even=True), eye3, format="csr")
        self.d3_even = sp.kron(eye2, _fd.diff_matrix(n3, self.h3, even=True), format="csr")

        self.geo = np.array([0.0, self.h2, 0.0, self.h3, width, height])
        self.inside = np.ones((1, 1), dtype=np.uint8)
        self.near_i = np.zeros((1, 1), dtype=np.int64)
        self.near_j = np.zeros((1, 1), dtype=np.int64)
        self.node_a, self.node_b = i.astype(np.int64), j.astype(np.int64)

    def describe(self) -> dict:
        return {"kind": self.kind, "width": self.width, "height": self.height,
                "n2": self.n2, "n3": self.n3}

    def contains(self, x2, x3, tol: float = 0.0):
        return (x2 >= -tol) & (x2 <= self.width + tol) & (x3 >= -tol) & (x3 <= self.height + tol)

    def wall_distance(self, x2, x3):
        x2, x3 = np.asarray(x2, float), np.asarray(x3, float)
        return np.minimum.reduce([x2, self.width - x2, x3, self.height - x3])

    def cutoff(self, x2, x3, q, d0):
        # product of per-wall ramps stays smooth near the corners
        x2, x3 = np.asarray(x2, float), np.asarray(x3, float)
        out = np.ones(np.broadcast(x2, x3).shape)
        for d in (x2, self.width - x2, x3, self.height - x3):
            out = out * wall_cutoff(d, q, d0)
        return out

    def tangential_part(self, v2, v3):
        v2, v3 = v2.copy(), v3.copy()
        v2[..., self._wall2] = 0.0
        v3[..., self._wall3] = 0.0
        return v2, v3

    def solve_dirichlet(self, rhs: np.ndarray) -> np.ndarray:
        """Solve Lap chi = rhs with chi = 0 on the walls (sine series)."""
        n2, n3 = self.n2, self.n3
        a = np.arange(1, n2 - 1)
        b = np.arange(1, n3 - 1)
        s2 = np.sin(np.pi * np.outer(a, a) / (n2 - 1))
        s3 = np.sin(np.pi * np.outer(b, b) / (n3 - 1))
        f = rhs.reshape(n2, n3)[1:-1, 1:-1]
        coef = (2.0 / (n2 - 1)) * (2.0 / (n3 - 1)) * (s2 @ f @ s3)
        lam = np.pi**2 * ((a[:, None] / self.width) ** 2 + (b[None, :] / self.height) ** 2)
        chi = np.zeros((n2, n3))
        chi[1:-1, 1:-1] = s2 @ (-coef / lam) @ s3
        return chi.ravel()


# ---------------------------------------------------------------------------
# disk


def _reflected_radial(nr: int, nth: int, dr: float, deriv: int, order: int, even_wall: bool = False) -> sp.csr_matrix:
    """Radial difference matrix on the polar grid, closing the centre by reflection.

    ``even_wall`` mirrors the stencil about r = R instead of going one-sided.
    """
    half = (deriv + order - 1) // 2
    size = deriv + order
    rows, cols, vals = [], [], []
    shift = nth // 2
    for j in range(nr):
        if j + half <= nr - 1 or even_wall:
            stencil = np.arange(j - half, j + half + 1)
        else:
            stencil = np.arange(nr - size, nr)
        w = _fd.fd_weights(stencil - j, deriv) / dr**deriv
        stencil = np.where(stencil > nr - 1, 2 * (nr - 1) - stencil, stencil)
        for jj, wj in zip(stencil, w):
            for i in range(nth):
                rows.append(j * nth + i)
                if jj >= 0:
                    cols.append(jj * nth + i)
                else:
                    cols.append((-jj - 1) * nth + (i + shift) % nth)
                vals.append(wj)
    n = nr * nth
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _periodic_fd(n: int, h: float, deriv: int, order: int) -> sp.csr_matrix:
    half = (deriv + order - 1) // 2
    offs = np.arange(-half, half + 1)
    w = _fd.fd_weights(offs, deriv) / h**deriv
    mat = sp.lil_matrix((n, n))
    for i in range(n):
        for o, wo in zip(offs, w):
            mat[i, (i + o) % n] += wo
    return mat.tocsr()


def _s_quadrature(s: np.ndarray) -> np.ndarray:
    """Weights for int_0^{s[-1]} g(s) ds from piecewise cubics through the nodes s."""
    n = len(s)
    w = np.zeros(n)
    edges = np.concatenate([[0.0], s])
    for c in range(n):
        a, b = edges[c], edges[c + 1]
        j0 = min(max(c - 2, 0), n - 4)
        nodes = s[j0:j0 + 4]
        scale = nodes[-1]
        t = nodes / scale
        moments = np.array([(b**(k + 1) - a**(k + 1)) / (k + 1) / scale**k for k in range(4)])
        w[j0:j0 + 4] += np.linalg.solve(np.vander(t, 4, increasing=True).T, moments)
    return w


class DiskSection(CrossSection):
    kind = "disk"

    def __init__(self, radius: float = 1.0, n_r: int = 33, n_theta: int = 64):
        if radius <= 0:
            raise ValueError("disk radius must be positive")
        if n_theta % 2 or n_theta < 8:
            raise ValueError("disk needs an even number (>= 8) of angular nodes")
        if n_r < 8:
            raise ValueError("disk needs at least 8 radial nodes")
        self.radius, self.n_r, self.n_theta = float(radius), n_r, n_theta
        self.dr = radius / (n_r - 0.5)
        self.dtheta = 2.0 * np.pi / n_theta
        self.r = (np.arange(n_r) + 0.5) * self.dr
        self.r[-1] = radius
        self.theta = np.arange(n_theta) * self.dtheta
        rr, tt = np.meshgrid(self.r, self.theta, indexing="ij")
        self.r_nodes, self.theta_nodes = rr.ravel(), tt.ravel()
        cos, sin = np.cos(self.theta_nodes), np.sin(self.theta_nodes)
        self.points = np.column_stack([self.r_nodes * cos, self.r_nodes * sin])
        radial = 0.5 * _s_quadrature(self.r**2)
        self.weights = np.repeat(radial, n_theta) * self.dtheta
        self.lattice_shape = (n_r, n_theta)
        self.spacing = self.dr

        self.boundary = np.arange((n_r - 1) * n_theta, n_r * n_theta)
        self.normals = np.column_stack([np.cos(self.theta), np.sin(self.theta)])

        eye_r = sp.identity(n_r, format="csr")
        dth = sp.kron(eye_r, sp.csr_matrix(_fd.periodic_spectral_diff(n_theta, 2 * np.pi)), format="csr")
        dth_low = sp.kron(eye_r, _periodic_fd(n_theta, self.dtheta, 1, 2), format="csr")
        dr4 = _reflected_radial(n_r, n_theta, self.dr, 1, 4)
        dr2 = _reflected_radial(n_r, n_theta, self.dr, 1, 2)
        inv_r = 1.0 / self.r_nodes
        c, s = sp.diags(cos), sp.diags(sin)
        self.d_r, self.d_theta = dr4, dth
        self.d2 = (c @ dr4 - sp.diags(sin * inv_r) @ dth).tocsr()
        self.d3 = (s @ dr4 + sp.diags(cos * inv_r) @ dth).tocsr()
        self.d2_low = (c @ dr2 - sp.diags(sin * inv_r) @ dth_low).tocsr()
        self.d3_low = (s @ dr2 + sp.diags(cos * inv_r) @ dth_low).tocsr()
        dr_even = _reflected_radial(n_r, n_theta, self.dr, 1, 4, even_wall=True)
        self.d2_even = (c @ dr_even - sp.diags(sin * inv_r) @ dth).tocsr()
        self.d3_even = (s @ dr_even + sp.diags(cos * inv_r) @ dth).tocsr()
        self._lap = None

        self.geo = np.array([self.dr, self.dtheta, radius, 0.0, 0.0, 0.0])
        self.inside = np.ones((1, 1), dtype=np.uint8)
        self.near_i = np.zeros((1, 1), dtype=np.int64)
        self.near_j = np.zeros((1, 1), dtype=np.int64)
        j, i = np.divmod(np.arange(n_r * n_theta), n_theta)
        self.node_a, self.node_b = j.astype(np.int64), i.astype(np.int64)

    def describe(self) -> dict:
        return {"kind": self.kind, "radius": self.radius, "n_r": self.n_r, "n_theta": self.n_theta}

    def contains(self, x2, x3, tol: float = 0.0):
        return np.hypot(x2, x3) <= self.radius + tol

    def wall_distance(self, x2, x3):
        return self.radius - np.hypot(x2, x3)

    def tangential_part(self, v2, v3):
        v2, v3 = v2.copy(), v3.copy()
        b = self.boundary
        vn = v2[..., b] * self.normals[:, 0] + v3[..., b] * self.normals[:, 1]
        v2[..., b] -= vn * self.normals[:, 0]
        v3[..., b] -= vn * self.normals[:, 1]
        return v2, v3

    def _laplacian(self):
        if self._lap is None:
            nr, nth = self.n_r, self.n_theta
            drr = _reflected_radial(nr, nth, self.dr, 2, 4)
            dtt = sp.kron(sp.identity(nr), sp.csr_matrix(_fd.periodic_spectral_diff(nth, 2 * np.pi, 2)))
            inv_r = 1.0 / self.r_nodes
            lap = (drr + sp.diags(inv_r) @ self.d_r + sp.diags(inv_r**2) @ dtt).tolil()
            for p in self.boundary:
                lap.rows[p] = [p]
                lap.data[p] = [1.0]
            self._lap = spla.splu(lap.tocsc())
        return self._lap

    def solve_dirichlet(self, rhs: np.ndarray) -> np.ndarray:
        """Solve Lap chi = rhs with chi = 0 on r = R (fourth-order polar stencils)."""
        b = np.array(rhs, dtype=float)
        b[self.boundary] = 0.0
        return self._laplacian().solve(b)


# ---------------------------------------------------------------------------
# grid mask


class MaskSection(CrossSection):
    """Cells of a boolean mask with spacing h; nodes are cell centres.

    Experimental: derivatives are one-dimensional stencils along each
    contiguous run of cells, which drops to low order in thin parts.
    """

    kind = "grid-mask"

    def __init__(self, mask: np.ndarray, h: float, origin=(0.0, 0.0)):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or not mask.any():
            raise ValueError("mask must be a non-empty 2D boolean array")
        _, n_parts = ndimage.label(mask)
        if n_parts != 1:
            raise ValueError(f"mask is not connected ({n_parts} components)")
        padded = np.pad(~mask, 1, constant_values=True)
        _, n_out = ndimage.label(padded, structure=np.ones((3, 3)))
        if n_out != 1:
            raise ValueError("mask is not simply connected (it has holes)")
        self.mask, self.h = mask, float(h)
        self.origin = np.asarray(origin, dtype=float)
        n2, n3 = mask.shape
        ii, jj = np.nonzero(mask)
        self.node_a, self.node_b = ii.astype(np.int64), jj.astype(np.int64)
        n = ii.size
        self.points = np.column_stack([self.origin[0] + (ii + 0.5) * h, self.origin[1] + (jj + 0.5) * h])
        self.weights = np.full(n, h * h)
        self.lattice_shape = (n2, n3)
        self.spacing = self.h
        index = -np.ones(mask.shape, dtype=np.int64)
        index[ii, jj] = np.arange(n)
        self._index = index

        padm = np.pad(mask, 1)
        faces = []
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = padm[1 + ii + di, 1 + jj + dj]
            faces.append((~nb, np.array([di, dj], dtype=float)))
        missing = np.column_stack([f for f, _ in faces])
        self.boundary = np.flatnonzero(missing.any(axis=1))
        nrm = sum(f[:, None] * v for f, v in faces)[self.boundary]
        length = np.linalg.norm(nrm, axis=1)
        fallback = np.array([faces[k][1] for k in np.argmax(missing[self.boundary], axis=1)])
        self.normals = np.where(length[:, None] > 0, nrm / np.maximum(length, 1e-300)[:, None], fallback)
        self._missing = missing

        self.d2 = self._run_matrix(axis=0, order=4)
        self.d3 = self._run_matrix(axis=1, order=4)
        self.d2_low = self._run_matrix(axis=0, order=2)
        self.d3_low = self._run_matrix(axis=1, order=2)
        self.d2_even, self.d3_even = self.d2, self.d3

        dist, (ni, nj) = ndimage.distance_transform_edt(~mask, return_indices=True)
        self.near_i, self.near_j = ni.astype(np.int64), nj.astype(np.int64)
        self.fill_index = index[ni, nj]
        inside_dist = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]
        self._wall_dist = (inside_dist - 0.5) * h
        a = self.origin + 0.5 * h
        self.geo = np.array([a[0], h, a[1], h, 0.0, 0.0])
        self.inside = mask.astype(np.uint8)

    def describe(self) -> dict:
        return {"kind": self.kind, "h": self.h, "shape": list(self.mask.shape), "cells": int(self.n_nodes)}

    def _run_matrix(self, axis: int, order: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        mask = self.mask if axis == 0 else self.mask.T
        for line in range(mask.shape[1]):
            col = mask[:, line]
            edges = np.flatnonzero(np.diff(np.concatenate([[0], col.astype(int), [0]])))
            for start, stop in zip(edges[::2], edges[1::2]):
                length = stop - start
                use = order if length >= order + 2 else (2 if length >= 4 else 0)
                if use == 0:
                    continue
                d = _fd.diff_matrix(length, self.h, order=use).tocoo()
                a = np.arange(start, stop)
                if axis == 0:
                    ids = self._index[a, line]
                else:
                    ids = self._index[line, a]
                rows.extend(ids[d.row])
                cols.extend(ids[d.col])
                vals.extend(d.data)
        n = self.n_nodes
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def to_lattice(self, f: np.ndarray) -> np.ndarray:
        return f[..., self.fill_index]

    def contains(self, x2, x3, tol: float = 0.0):
        i = np.floor((np.asarray(x2) - self.origin[0]) / self.h).astype(int)
        j = np.floor((np.asarray(x3) - self.origin[1]) / self.h).astype(int)
        ok = (i >= 0) & (j >= 0) & (i < self.mask.shape[0]) & (j < self.mask.shape[1])
        out = np.zeros(np.shape(i), dtype=bool)
        out[ok] = self.mask[i[ok], j[ok]]
        return out

    def wall_distance(self, x2, x3):
        s2 = (np.asarray(x2, float) - self.origin[0]) / self.h - 0.5
        s3 = (np.asarray(x3, float) - self.origin[1]) / self.h - 0.5
        return ndimage.map_coordinates(self._wall_dist, [np.atleast_1d(s2), np.atleast_1d(s3)],
                                       order=1, mode="nearest").reshape(np.shape(s2))

    def tangential_part(self, v2, v3):
        v2, v3 = v2.copy(), v3.copy()
        x2_face = self._missing[:, 0] | self._missing[:, 1]
        x3_face = self._missing[:, 2] | self._missing[:, 3]
        v2[..., x2_face] = 0.0
        v3[..., x3_face] = 0.0
        return v2, v3

    def neighbour_laplacian(self, dirichlet: bool) -> sp.csr_matrix:
        """Five-point Laplacian; walls sit on cell faces."""
        n = self.n_nodes
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for k, (di, dj) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))):
            present = ~self._missing[:, k]
            src = np.flatnonzero(present)
            dst = self._index[self.node_a[src] + di, self.node_b[src] + dj]
            rows.extend(src)
            cols.extend(dst)
            vals.extend(np.ones(src.size))
            diag[present] -= 1.0
            if dirichlet:
                diag[~present] -= 2.0
        rows.extend(range(n))
        cols.extend(range(n))
        vals.extend(diag)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)) / self.h**2

    def solve_dirichlet(self, rhs: np.ndarray) -> np.ndarray:
        return spla.spsolve(self.neighbour_laplacian(True).tocsc(), np.asarray(rhs, float))


def build_cross_section(kind: str, **params) -> CrossSection:
    if kind == "rectangle":
        return RectangleSection(**params)
    if kind == "disk":
        return DiskSection(**params)
    if kind == "grid-mask":
        return MaskSection(**params)
    raise ValueError(f"unknown cross-section kind {kind!r}")


def l_shape_mask(n: int, notch: float = 0.5) -> np.ndarray:
    """Unit square with its upper-right corner of side `notch` removed."""
    mask = np.ones((n, n), dtype=bool)
    k = int(round(n * (1.0 - notch)))
    mask[k:, k:] = False
    return mask


# ---------------------------------------------------------------------------
# eigenbases


@dataclass
class EigenBasis:
    """Discretely orthonormal Neumann eigenfunctions e_n with eigenvalues lam."""

    section: CrossSection
    lam: np.ndarray
    kind: str = "dense"
    _values: np.ndarray | None = None
    _grad: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return self.lam.size

    @property
    def values(self) -> np.ndarray:
        """(n_nodes, n_modes) nodal values."""
        return self._values

    @property
    def gradients(self) -> tuple:
        return self._grad

    def project(self, f: np.ndarray) -> np.ndarray:
        """Coefficients <f, e_n> under the section quadrature; f has shape (..., n_nodes)."""
        return (f * self.section.weights) @ self._values

    def reconstruct(self, coef: np.ndarray) -> np.ndarray:
        return coef @ self._values.T

    def gradient(self, coef: np.ndarray) -> tuple:
        return coef @ self._grad[0].T, coef @ self._grad[1].T

    def gram(self) -> np.ndarray:
        v = self._values
        return v.T @ (self.section.weights[:, None] * v)

    def neumann_residual(self) -> float:
        """Largest |de_n/dn| on the wall relative to the gradient scale."""
        g2, g3 = self._grad
        sec = self.section
        b = sec.boundary
        dn = g2[b] * sec.normals[:, :1] + g3[b] * sec.normals[:, 1:]
        scale = max(np.sqrt(self.lam.max()), 1.0) * np.abs(self._values).max()
        return float(np.abs(dn).max() / scale)


class CosineBasis(EigenBasis):
    """Separable cosine basis of a rectangle, applied through 1D transforms."""

    def __init__(self, section: RectangleSection, n_modes: int | None = None):
        n2, n3 = section.n2, section.n3
        c2, s2, l2 = self._factors(section.x2, section.width)
        c3, s3, l3 = self._factors(section.x3, section.height)
        lam = (l2[:, None] + l3[None, :]).ravel()
        order = np.argsort(lam, kind="stable")
        total = n2 * n3
        m = total if n_modes is None else int(n_modes)
        if not 1 <= m <= total:
            raise ValueError(f"mode count must be between 1 and {total}")
        self.order = order[:m]
        super().__init__(section=section, lam=lam[self.order], kind="cosine")
        self.c2, self.c3, self.s2, self.s3 = c2, c3, s2, s3
        self.full = m == total

    @staticmethod
    def _factors(x, length):
        n = x.size
        k = np.arange(n)
        norm = np.full(n, np.sqrt(2.0 / length))
        norm[[0, -1]] = np.sqrt(1.0 / length)
        arg = np.pi * np.outer(x, k) / length
        return norm * np.cos(arg), -norm * (np.pi * k / length) * np.sin(arg), (np.pi * k / length) ** 2

    def _to_grid(self, f):
        return f.reshape(f.shape[:-1] + (self.section.n2, self.section.n3))

    def _scatter(self, coef):
        sec = self.section
        full = np.zeros(coef.shape[:-1] + (sec.n2 * sec.n3,))
        full[..., self.order] = coef
        return full.reshape(coef.shape[:-1] + (sec.n2, sec.n3))

    def project(self, f):
        sec = self.section
        g = self._to_grid(f) * sec.w2[:, None] * sec.w3[None, :]
        c = np.einsum("...ij,ia,jb->...ab", g, self.c2, self.c3, optimize=True)
        c = c.reshape(c.shape[:-2] + (-1,))
        return c[..., self.order]

    def _synth(self, coef, a, b):
        full = self._scatter(coef)
        out = np.einsum("...ab,ia,jb->...ij", full, a, b, optimize=True)
        return out.reshape(out.shape[:-2] + (-1,))

    def reconstruct(self, coef):
        return self._synth(coef, self.c2, self.c3)

    def gradient(self, coef):
        return self._synth(coef, self.s2, self.c3), self._synth(coef, self.c2, self.s3)

    @property
    def values(self):
        return self.reconstruct(np.eye(self.n_modes)).T

    @property
    def gradients(self):
        g2, g3 = self.gradient(np.eye(self.n_modes))
        return g2.T, g3.T

    def gram(self):
        v = self.values
        return v.T @ (self.section.weights[:, None] * v)

    def neumann_residual(self):
        self._grad = self.gradients
        self._values = self.values
        return EigenBasis.neumann_residual(self)


def bessel_neumann_roots(m: int, count: int, tol: float = 1e-12) -> np.ndarray:
    """First `count` positive zeros of J_m' by scanning and bisection.

    For m = 0 the trivial zero at the origin is excluded.
    """
    roots = []
    step = 0.05
    x = max(m, 0.1) * 0.5 + 0.05
    fx = special.jvp(m, x)
    while len(roots) < count:
        y = x + step
        fy = special.jvp(m, y)
        if fx == 0.0:
            roots.append(x)
        elif fx * fy < 0:
            a, b, fa = x, y, fx
            while b - a > tol:
                c = 0.5 * (a + b)
                fc = special.jvp(m, c)
                if fa * fc <= 0:
                    b = c
                else:
                    a, fa = c, fc
            roots.append(0.5 * (a + b))
        x, fx = y, fy
    return np.array(roots)


def _disk_basis(section: DiskSection, n_modes: int) -> EigenBasis:
    R = section.radius
    cands = [(0.0, 0, 0, "c")]
    m_max = int(2 * np.sqrt(n_modes)) + 4
    k_max = int(np.sqrt(n_modes)) + 4
    for m in range(m_max + 1):
        for k, root in enumerate(bessel_neumann_roots(m, k_max)):
            cands.append((root, m, k + 1, "c"))
            if m > 0:
                cands.append((root, m, k + 1, "s"))
    cands.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    chosen = cands[:n_modes]
    last = chosen[-1]
    if last[3] == "c" and last[1] > 0:
        chosen = chosen[:-1]  # keep cos/sin pairs together
    r, th = section.r_nodes, section.theta_nodes
    cos, sin = np.cos(th), np.sin(th)
    n = section.n_nodes
    vals = np.empty((n, len(chosen)))
    g2 = np.empty_like(vals)
    g3 = np.empty_like(vals)
    lam = np.empty(len(chosen))
    for col, (root, m, k, part) in enumerate(chosen):
        kk = root / R
        jr = special.jv(m, kk * r) if root > 0 else np.ones(n)
        djr = kk * special.jvp(m, kk * r) if root > 0 else np.zeros(n)
        ang = np.cos(m * th) if part == "c" else np.sin(m * th)
        dang = -m * np.sin(m * th) if part == "c" else m * np.cos(m * th)
        vals[:, col] = jr * ang
        dr_f, dth_f = djr * ang, jr * dang / r
        g2[:, col] = cos * dr_f - sin * dth_f
        g3[:, col] = sin * dr_f + cos * dth_f
        lam[col] = kk**2
    gram = vals.T @ (section.weights[:, None] * vals)
    chol = np.linalg.cholesky(gram)
    tinv = np.linalg.inv(chol).T
    basis = EigenBasis(section=section, lam=lam, kind="bessel",
                       _values=vals @ tinv, _grad=(g2 @ tinv, g3 @ tinv),
                       meta={"modes": [(m, k, p) for _, m, k, p in chosen]})
    return basis


def _fd_basis(section: CrossSection, n_modes: int) -> EigenBasis:
    if isinstance(section, MaskSection):
        lap = -section.neighbour_laplacian(False)
    elif isinstance(section, RectangleSection):
        lap = _rect_fd_laplacian(section)
    else:
        raise ValueError("finite-difference eigenbasis is available for rectangle and grid-mask sections")
    n = section.n_nodes
    m = min(n_modes, n)
    w = section.weights
    sw = np.sqrt(w)
    # symmetrise with the quadrature weights so eigenvectors come out orthonormal
    sym = sp.diags(sw) @ lap @ sp.diags(1.0 / sw)
    if n <= 4000:
        ev, vec = np.linalg.eigh(0.5 * (sym + sym.T).toarray())
        ev, vec = ev[:m], vec[:, :m]
    else:
        ev, vec = spla.eigsh(0.5 * (sym + sym.T).tocsc(), k=m, sigma=-1.0, which="LM")
        idx = np.argsort(ev)
        ev, vec = ev[idx], vec[:, idx]
    vals = vec / sw[:, None]
    vals[:, 0] = 1.0 / np.sqrt(section.area)
    ev[0] = 0.0
    return EigenBasis(section=section, lam=np.maximum(ev, 0.0), kind="fd",
                      _values=vals, _grad=(section.d2 @ vals, section.d3 @ vals))


def _rect_fd_laplacian(section: RectangleSection) -> sp.csr_matrix:
    def lap1(n, h):
        main = np.full(n, 2.0)
        off = -np.ones(n - 1)
        mat = sp.diags([off, main, off], [-1, 0, 1]).tolil()
        mat[0, 1] = -2.0
        mat[n - 1, n - 2] = -2.0
        return mat.tocsr() / h**2

    return (sp.kron(lap1(section.n2, section.h2), sp.identity(section.n3))
            + sp.kron(sp.identity(section.n2), lap1(section.n3, section.h3))).tocsr()


def _cache_file(section: CrossSection, n_modes, method: str, cache_dir) -> Path:
    desc = section.describe()
    if isinstance(section, MaskSection):
        desc["mask"] = hashlib.sha1(np.packbits(section.mask).tobytes()).hexdigest()[:12]
    key = json.dumps([desc, n_modes, method], sort_keys=True)
    return Path(cache_dir) / f"eigenbasis-{section.kind}-{hashlib.sha1(key.encode()).hexdigest()[:16]}.npz"


def build_eigenbasis(section: CrossSection, n_modes: int | None = None, method: str = "analytic",
                     cache_dir=None) -> EigenBasis:
    """Neumann eigenbasis of the section, ordered by increasing eigenvalue.

    ``n_modes=None`` keeps every cosine mode on a rectangle and 64 modes
    otherwise.  ``method="fd"`` solves the discrete eigenproblem instead of
    using closed forms.  With ``cache_dir`` dense bases are stored in (and
    reloaded from) an .npz side file keyed by section, resolution and mode count.
    """
    if method not in ("analytic", "fd"):
        raise ValueError(f"unknown eigenbasis method {method!r}")
    if n_modes is not None and n_modes < 1:
        raise ValueError("need at least one mode")
    if n_modes is not None and n_modes > section.n_nodes:
        raise ValueError(f"mode count {n_modes} exceeds the {section.n_nodes} section nodes")
    dense = method == "fd" or not isinstance(section, RectangleSection)
    if cache_dir is not None and dense:
        path = _cache_file(section, n_modes, method, cache_dir)
        if path.exists():
            with np.load(path) as z:
                return EigenBasis(section=section, lam=z["lam"], kind=str(z["kind"]), _values=z["values"],
                                  _grad=(z["g2"], z["g3"]), meta={"cache": str(path)})
        basis = build_eigenbasis(section, n_modes, method)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, lam=basis.lam, kind=basis.kind, values=basis.values,
                 g2=basis.gradients[0], g3=basis.gradients[1])
        return basis
    if method == "fd" or isinstance(section, MaskSection):
        return _fd_basis(section, n_modes or 64)
    if isinstance(section, RectangleSection):
        return CosineBasis(section, n_modes)
    if isinstance(section, DiskSection):
        return _disk_basis(section, n_modes or 64)
    raise ValueError(f"no eigenbasis for {section!r}")

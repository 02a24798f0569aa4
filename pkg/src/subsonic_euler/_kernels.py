"""Compiled kernels: cubic interpolation on section lattices and RK4 characteristic tracing.

Section kinds share one calling convention: ``kind`` (0 rectangle, 1 disk,
2 grid-mask), a float parameter vector ``geo`` and, for masks, the inside
flags plus the nearest-inside-cell maps used for wall projection.

Rectangle and mask lattices: geo = [a2, h2, a3, h3, W, H].
Disk lattice (rows = radius, columns = angle): geo = [dr, dtheta, R, ...].
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _cubic(s, n, clamp_low):
    """First node and Lagrange weights for lattice coordinate s (node j at s = j)."""
    j0 = int(math.floor(s)) - 1
    if clamp_low and j0 < 0:
        j0 = 0
    if j0 > n - 4:
        j0 = n - 4
    t = s - j0
    w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0
    w1 = t * (t - 2.0) * (t - 3.0) / 2.0
    w2 = -t * (t - 1.0) * (t - 3.0) / 2.0
    w3 = t * (t - 1.0) * (t - 2.0) / 6.0
    return j0, w0, w1, w2, w3


@njit(cache=True)
def _periodic(s, n):
    j0 = int(math.floor(s)) - 1
    t = s - j0
    w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0
    w1 = t * (t - 2.0) * (t - 3.0) / 2.0
    w2 = -t * (t - 1.0) * (t - 3.0) / 2.0
    w3 = t * (t - 1.0) * (t - 2.0) / 6.0
    return j0 % n, w0, w1, w2, w3


@njit(cache=True)
def _eval_lattice(da, db, m, kind, geo, x2, x3, vector):
    """Interpolate slice m of one or two lattice fields at (x2, x3).

    For the disk with ``vector`` set, (da, db) hold radial and angular
    components; the result is converted back to Cartesian components.
    """
    if kind == 1:
        r = math.sqrt(x2 * x2 + x3 * x3)
        th = math.atan2(x3, x2)
        if th < 0.0:
            th += 2.0 * math.pi
        nr = da.shape[1]
        nth = da.shape[2]
        jr, a0, a1, a2, a3 = _cubic(r / geo[0] - 0.5, nr, False)
        it, b0, b1, b2, b3 = _periodic(th / geo[1], nth)
        wa = (a0, a1, a2, a3)
        wb = (b0, b1, b2, b3)
        va = 0.0
        vb = 0.0
        half = nth // 2
        for p in range(4):
            j = jr + p
            sgn = 1.0
            shift = 0
            if j < 0:
                j = -j - 1
                shift = half
                if vector:
                    sgn = -1.0
            sa = 0.0
            sb = 0.0
            for q in range(4):
                col = (it + q + shift) % nth
                sa += wb[q] * da[m, j, col]
                sb += wb[q] * db[m, j, col]
            va += sgn * wa[p] * sa
            vb += sgn * wa[p] * sb
        if vector:
            c = math.cos(th)
            s = math.sin(th)
            return c * va - s * vb, s * va + c * vb
        return va, vb
    n2 = da.shape[1]
    n3 = da.shape[2]
    i0, a0, a1, a2, a3 = _cubic((x2 - geo[0]) / geo[1], n2, True)
    j0, b0, b1, b2, b3 = _cubic((x3 - geo[2]) / geo[3], n3, True)
    wa = (a0, a1, a2, a3)
    wb = (b0, b1, b2, b3)
    va = 0.0
    vb = 0.0
    for p in range(4):
        sa = 0.0
        sb = 0.0
        for q in range(4):
            sa += wb[q] * da[m, i0 + p, j0 + q]
            sb += wb[q] * db[m, i0 + p, j0 + q]
        va += wa[p] * sa
        vb += wa[p] * sb
    return va, vb


@njit(cache=True)
def _project(kind, geo, inside, near_i, near_j, x2, x3):
    """Move a point back into the section; returns the new point and the distance moved."""
    y2 = x2
    y3 = x3
    if kind == 0:
        y2 = min(max(x2, 0.0), geo[4])
        y3 = min(max(x3, 0.0), geo[5])
    elif kind == 1:
        r = math.sqrt(x2 * x2 + x3 * x3)
        if r > geo[2]:
            y2 = x2 * geo[2] / r
            y3 = x3 * geo[2] / r
    else:
        h = geo[1]
        lo2 = geo[0] - 0.5 * h
        lo3 = geo[2] - 0.5 * h
        n2 = inside.shape[0]
        n3 = inside.shape[1]
        y2 = min(max(x2, lo2), lo2 + n2 * h)
        y3 = min(max(x3, lo3), lo3 + n3 * h)
        i = min(max(int(math.floor((y2 - lo2) / h)), 0), n2 - 1)
        j = min(max(int(math.floor((y3 - lo3) / h)), 0), n3 - 1)
        if inside[i, j] == 0:
            ni = near_i[i, j]
            nj = near_j[i, j]
            y2 = min(max(y2, lo2 + ni * h), lo2 + (ni + 1) * h)
            y3 = min(max(y3, lo3 + nj * h), lo3 + (nj + 1) * h)
    return y2, y3, math.hypot(y2 - x2, y3 - x3)


@njit(cache=True)
def _velocity(wa, wb, m, kind, geo, x2, x3):
    return _eval_lattice(wa, wb, m, kind, geo, x2, x3, True)


@njit(cache=True)
def _rk4(wa, wb, m, kind, geo, x2, x3, dt):
    """One backward RK4 step of size dt from fine slice m to m - 2."""
    k1a, k1b = _velocity(wa, wb, m, kind, geo, x2, x3)
    k2a, k2b = _velocity(wa, wb, m - 1, kind, geo, x2 - 0.5 * dt * k1a, x3 - 0.5 * dt * k1b)
    k3a, k3b = _velocity(wa, wb, m - 1, kind, geo, x2 - 0.5 * dt * k2a, x3 - 0.5 * dt * k2b)
    k4a, k4b = _velocity(wa, wb, m - 2, kind, geo, x2 - dt * k3a, x3 - dt * k3b)
    y2 = x2 - dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    y3 = x3 - dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return y2, y3


@njit(cache=True)
def trace_all(kind, geo, inside, near_i, near_j, wa, wb, qx2, qx3, node_a, node_b,
              n1, h1, mu, src, duhamel, stationary, warn_dist):
    """Trace every grid node back to the inlet.

    wa, wb, mu, src live on a lattice refined four times along x1.  With
    ``duhamel`` set the damped source integral along each path is also
    accumulated with Simpson's rule on the half-steps.  ``stationary`` skips
    the trace (zero advection) and samples the lattice at the node itself.

    Returns foot points, exp(-int_0^x1 mu), the source integral and
    [projection count, largest projection distance, count above warn_dist].
    """
    nq = qx2.shape[0]
    foot2 = np.empty((n1, nq))
    foot3 = np.empty((n1, nq))
    decay = np.ones((n1, nq))
    integ = np.zeros((n1, nq))
    stats = np.zeros(3)
    dt = 0.5 * h1
    for k in range(n1):
        for p in range(nq):
            x2 = qx2[p]
            x3 = qx3[p]
            m = 4 * k
            big = 0.0
            acc = 0.0
            mu_a = 0.0
            r_a = 0.0
            if duhamel:
                if stationary:
                    mu_a = mu[m, node_a[p], node_b[p]]
                    r_a = src[m, node_a[p], node_b[p]]
                else:
                    mu_a, r_a = _eval_lattice(mu, src, m, kind, geo, x2, x3, False)
            for _ in range(k):
                mu_s = (0.0, 0.0)
                r_s = (0.0, 0.0)
                for half in range(2):
                    if not stationary:
                        x2, x3 = _rk4(wa, wb, m, kind, geo, x2, x3, dt)
                        x2, x3, dist = _project(kind, geo, inside, near_i, near_j, x2, x3)
                        if dist > 0.0:
                            stats[0] += 1.0
                            if dist > stats[1]:
                                stats[1] = dist
                            if dist > warn_dist:
                                stats[2] += 1.0
                    m -= 2
                    if duhamel:
                        if stationary:
                            a = mu[m, node_a[p], node_b[p]]
                            b = src[m, node_a[p], node_b[p]]
                        else:
                            a, b = _eval_lattice(mu, src, m, kind, geo, x2, x3, False)
                        if half == 0:
                            mu_s = (a, mu_s[1])
                            r_s = (b, r_s[1])
                        else:
                            mu_s = (mu_s[0], a)
                            r_s = (r_s[0], b)
                if duhamel:
                    mid = big + dt / 12.0 * (5.0 * mu_a + 8.0 * mu_s[0] - mu_s[1])
                    end = big + dt / 3.0 * (mu_a + 4.0 * mu_s[0] + mu_s[1])
                    acc += dt / 3.0 * (r_a * math.exp(-big) + 4.0 * r_s[0] * math.exp(-mid)
                                       + r_s[1] * math.exp(-end))
                    big = end
                    mu_a = mu_s[1]
                    r_a = r_s[1]
            foot2[k, p] = x2
            foot3[k, p] = x3
            decay[k, p] = math.exp(-big)
            integ[k, p] = acc
    return foot2, foot3, decay, integ, stats


@njit(cache=True)
def trace_path(kind, geo, inside, near_i, near_j, wa, wb, x1_index, h1, x2, x3):
    """Backward trace of one point from station x1_index, keeping every half-step."""
    n = 2 * x1_index + 1
    tau = np.empty(n)
    path = np.empty((n, 2))
    dt = 0.5 * h1
    m = 4 * x1_index
    tau[0] = x1_index * h1
    path[0, 0] = x2
    path[0, 1] = x3
    for s in range(1, n):
        x2, x3 = _rk4(wa, wb, m, kind, geo, x2, x3, dt)
        x2, x3, _ = _project(kind, geo, inside, near_i, near_j, x2, x3)
        m -= 2
        tau[s] = tau[0] - s * dt
        path[s, 0] = x2
        path[s, 1] = x3
    return tau, path


@njit(cache=True)
def interpolate_points(kind, geo, data, h1, x1, x2, x3):
    """Cubic-in-x1 times bicubic-in-section interpolation of a lattice field."""
    n1 = data.shape[0]
    out = np.empty(x1.shape[0])
    for p in range(x1.shape[0]):
        k0, c0, c1, c2, c3 = _cubic(x1[p] / h1, n1, True)
        cw = (c0, c1, c2, c3)
        v = 0.0
        for a in range(4):
            va, _ = _eval_lattice(data, data, k0 + a, kind, geo, x2[p], x3[p], False)
            v += cw[a] * va
        out[p] = v
    return out


@njit(cache=True)
def interpolate_section(kind, geo, data, x2, x3):
    """Bicubic interpolation of one lattice slice (shape (1, A, B)) at many points."""
    out = np.empty(x2.shape[0])
    for p in range(x2.shape[0]):
        out[p], _ = _eval_lattice(data, data, 0, kind, geo, x2[p], x3[p], False)
    return out

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from subsonic_euler import DiskSection, MaskSection, RectangleSection, build_cross_section, build_eigenbasis
from subsonic_euler.geometry import bessel_neumann_roots, l_shape_mask, smoothstep, wall_cutoff

# frozen: scipy.special.jnp_zeros(1, 1)[0] ** 2
DISK_LAMBDA1 = 3.3899577166718897


def _sections():
    return [RectangleSection(1.0, 1.0, 33, 33), RectangleSection(2.0, 0.5, 17, 9),
            DiskSection(1.0, 17, 32), MaskSection(l_shape_mask(16), 1 / 16)]


def test_unit_square_area():
    assert abs(build_cross_section("rectangle", width=1, height=1, n2=33, n3=33).area - 1.0) < 1e-10


def test_disk_area_and_radial_quadrature():
    assert DiskSection(1.0, 9, 16).area == pytest.approx(np.pi, rel=1e-12)
    # integrand cos(r) is not polynomial in r^2: error must fall with refinement
    errs = []
    for n in (9, 17, 33):
        sec = DiskSection(1.0, n, 2 * n)
        r = np.hypot(*sec.points.T)
        errs.append(abs(sec.integrate(np.cos(r)) - 2 * np.pi * (np.cos(1) + np.sin(1) - 1)))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-6


def test_l_shape_area_counts_cells():
    mask = l_shape_mask(20, 0.5)
    sec = MaskSection(mask, 0.05)
    assert sec.area == pytest.approx(mask.sum() * 0.05**2, rel=1e-12)
    assert mask.sum() == 300


@pytest.mark.parametrize("sec", _sections(), ids=lambda s: s.kind)
def test_wall_normals_are_unit(sec):
    assert np.allclose(np.hypot(*sec.normals.T), 1.0, atol=1e-12)


def test_mask_reentrant_corner_normals_are_per_face():
    sec = MaskSection(l_shape_mask(8, 0.5), 1 / 8)
    # the cell diagonal to the re-entrant corner touches no outside face
    idx = sec._index[3, 3]
    assert idx not in set(sec.boundary)
    # cells on the notch edges face +x2 or +x3
    i = sec._index[3, 5]
    k = list(sec.boundary).index(i)
    assert np.allclose(sec.normals[k], [1.0, 0.0])


def test_sections_reject_bad_input():
    with pytest.raises(ValueError):
        RectangleSection(0.0, 1.0)
    with pytest.raises(ValueError):
        RectangleSection(1.0, 1.0, 5, 9)
    with pytest.raises(ValueError):
        DiskSection(1.0, 9, 15)
    ring = np.ones((6, 6), bool)
    ring[2:4, 2:4] = False
    with pytest.raises(ValueError, match="holes"):
        MaskSection(ring, 0.1)
    two = np.zeros((6, 6), bool)
    two[0, 0] = two[5, 5] = True
    with pytest.raises(ValueError, match="connected"):
        MaskSection(two, 0.1)
    with pytest.raises(ValueError):
        build_cross_section("hexagon")


@pytest.mark.parametrize("sec", _sections(), ids=lambda s: s.kind)
def test_eigenbasis_invariants(sec):
    basis = build_eigenbasis(sec, 24)
    assert basis.lam[0] == 0.0
    assert np.all(np.diff(basis.lam) >= -1e-12)
    assert np.allclose(np.abs(basis.values[:, 0]), sec.area**-0.5, atol=1e-10)
    assert np.abs(basis.gram() - np.eye(basis.n_modes)).max() < 1e-8


def test_analytic_bases_satisfy_neumann_condition():
    for sec in (RectangleSection(1.0, 1.0, 17, 17), DiskSection(1.0, 17, 32)):
        assert build_eigenbasis(sec, 20).neumann_residual() < 1e-10


def test_unit_square_eigenvalues():
    basis = build_eigenbasis(RectangleSection(1.0, 1.0, 17, 17))
    assert basis.lam[1] == pytest.approx(np.pi**2, rel=1e-14)
    expected = np.sort([np.pi**2 * (j * j + k * k) for j in range(17) for k in range(17)])
    assert np.allclose(basis.lam, expected)


def test_fd_eigenvalue_converges_at_second_order():
    errs = []
    for n in (9, 17, 33):
        basis = build_eigenbasis(RectangleSection(1.0, 1.0, n, n), 4, method="fd")
        errs.append(abs(basis.lam[1] - np.pi**2))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(rates - 2.0) < 0.15)


def test_disk_first_eigenvalue():
    basis = build_eigenbasis(DiskSection(1.0, 17, 32), 8)
    assert basis.lam[1] == pytest.approx(DISK_LAMBDA1, abs=1e-10)
    assert basis.lam[2] == pytest.approx(DISK_LAMBDA1, abs=1e-10)  # cos/sin pair


@pytest.mark.parametrize("m", [0, 1, 2, 5])
def test_bessel_roots_match_reference(m):
    ours = bessel_neumann_roots(m, 4)
    assert np.allclose(ours, special.jnp_zeros(m, 4), atol=1e-11)


def test_disk_truncation_keeps_pairs_together():
    basis = build_eigenbasis(DiskSection(1.0, 17, 32), 2)
    assert basis.n_modes == 1


def test_projection_examples():
    sec = RectangleSection(1.0, 1.0, 17, 17)
    basis = build_eigenbasis(sec, 10)
    e = basis.values
    assert np.allclose(basis.project(e[:, 2]), np.eye(10)[2], atol=1e-8)
    c = basis.project(np.full(sec.n_nodes, 2.5))
    assert c[0] == pytest.approx(2.5 * sec.area**0.5) and np.abs(c[1:]).max() < 1e-12
    coef = basis.project(3 * e[:, 1] - 2 * e[:, 4])
    assert np.allclose(coef, [0, 3, 0, 0, -2, 0, 0, 0, 0, 0], atol=1e-8)


def test_projection_shape_mismatch():
    basis = build_eigenbasis(RectangleSection(1.0, 1.0, 9, 9), 5)
    with pytest.raises(ValueError):
        basis.project(np.ones(10))


def test_parseval_remainder_decreases_with_mode_count():
    sec = DiskSection(1.0, 17, 32)
    x, y = sec.points.T
    f = np.exp(-((x - 0.2) ** 2 + y**2) / 0.3)
    total = sec.integrate(f * f)
    rem = []
    for m in (5, 10, 20, 40):
        c = build_eigenbasis(sec, m).project(f)
        rem.append(total - np.sum(c * c))
    assert np.all(np.diff(rem) <= 1e-14)
    assert rem[-1] >= -1e-12


def test_eigenbasis_cache_round_trip(tmp_path):
    sec = DiskSection(1.0, 9, 16)
    first = build_eigenbasis(sec, 6, cache_dir=tmp_path)
    assert len(list(tmp_path.glob("*.npz"))) == 1
    second = build_eigenbasis(sec, 6, cache_dir=tmp_path)
    assert np.array_equal(first.values, second.values) and np.array_equal(first.lam, second.lam)


@given(st.floats(0.0, 1.0), st.integers(1, 6))
def test_smoothstep_is_a_monotone_ramp(s, q):
    v = smoothstep(np.array([s, min(s + 1e-3, 1.0)]), q)
    assert 0.0 <= v[0] <= v[1] <= 1.0 + 1e-15
    assert smoothstep(np.array([0.0]), q)[0] == 0.0 and smoothstep(np.array([1.0]), q)[0] == pytest.approx(1.0)


def test_wall_cutoff_vanishes_in_the_wall_band():
    d = np.linspace(0, 0.5, 51)
    c = wall_cutoff(d, 3, 0.2)
    assert np.all(c[d <= 0.1] == 0.0) and np.all(c[d >= 0.2] == 1.0)

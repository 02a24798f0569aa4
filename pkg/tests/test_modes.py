import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import solve_banded

from subsonic_euler.modes import ModeODE, closed_form_d, solve_homogeneous_c, solve_mode_odes

COTH1 = 1.3130352854993312  # coth(1), frozen


def test_closed_form_example():
    x = np.linspace(0, 1, 11)
    d, dd = closed_form_d(np.array([1.0]), 1.0, [0.0], [1.0], x)
    assert d[-1, 0] == pytest.approx(COTH1, rel=1e-15)
    assert np.allclose(d[:, 0], np.cosh(x) / np.sinh(1.0), rtol=1e-14)
    assert dd[0, 0] == pytest.approx(0.0, abs=1e-15) and dd[-1, 0] == pytest.approx(1.0, rel=1e-14)


def test_closed_form_large_eigenvalue_stays_finite():
    x = np.linspace(0, 2, 33)
    d, dd = closed_form_d(np.array([1e6]), 2.0, [1.0], [-1.0], x)
    assert np.all(np.isfinite(d)) and np.all(np.isfinite(dd))
    assert dd[0, 0] == pytest.approx(1.0) and dd[-1, 0] == pytest.approx(-1.0)


def _tridiagonal_oracle(lam, length, b1, b2, n):
    """Second-order centred differences with ghost nodes for the Neumann data."""
    h = length / (n - 1)
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0 / h**2
    ab[1, :] = -2.0 / h**2 - lam
    ab[2, :-1] = 1.0 / h**2
    ab[0, 1] = 2.0 / h**2
    ab[2, -2] = 2.0 / h**2
    rhs = np.zeros(n)
    rhs[0] = 2.0 * b1 / h
    rhs[-1] = -2.0 * b2 / h
    return solve_banded((1, 1), ab, rhs)


def test_closed_form_matches_tridiagonal_oracle_at_second_order():
    errs = []
    for n in (33, 65, 129, 257):
        x = np.linspace(0, 1.5, n)
        d, _ = closed_form_d(np.array([2.0]), 1.5, [0.3], [-0.7], x)
        errs.append(np.abs(d[:, 0] - _tridiagonal_oracle(2.0, 1.5, 0.3, -0.7, n)).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 2.0) < 0.1)


@given(st.floats(0.01, 50.0), st.floats(-1, 1), st.floats(-1, 1))
def test_closed_form_solves_its_problem(lam, b1, b2):
    x = np.linspace(0, 1, 201)
    d, dd = closed_form_d(np.array([lam]), 1.0, [b1], [b2], x)
    assert dd[0, 0] == pytest.approx(b1, abs=1e-12) and dd[-1, 0] == pytest.approx(b2, abs=1e-12)
    d2 = np.gradient(dd[:, 0], x, edge_order=2)
    scale = 1 + abs(b1) + abs(b2) + lam * np.abs(d).max()
    assert np.abs(d2 - lam * d[:, 0])[1:-1].max() < 1e-3 * scale


def test_homogeneous_part_is_fourth_order():
    errs = []
    for n in (17, 33, 65):
        x = np.linspace(0, 1, n)
        exact = np.cos(2 * np.pi * x)
        g = (-(2 * np.pi) ** 2 - 3.0) * exact
        c = solve_homogeneous_c(np.array([3.0]), g[:, None], x[1] - x[0])
        errs.append(np.abs(c[:, 0] - exact).max())
    assert np.log2(errs[0] / errs[1]) > 3.7 and np.log2(errs[1] / errs[2]) > 3.7


@pytest.mark.parametrize("lam,coef", [(9.869604401089358, 1.0), (3.0, 0.6), (120.0, 0.75)])
def test_manufactured_mode_recovered(lam, coef):
    length = 1.3
    x = np.linspace(0, length, 129)
    exact = np.cos(np.pi * x / length)
    f = -(coef * (np.pi / length) ** 2 + lam) * exact
    a, da = ModeODE(lam, coef, f, 0.0, 0.0, x).solve()
    assert np.abs(a - exact).max() <= 1e-8 * np.abs(exact).max()
    assert np.abs(da + np.pi / length * np.sin(np.pi * x / length)).max() < 1e-5


def test_zero_mode_linear_case_exact():
    for length in (1.0, 2.5):
        x = np.linspace(0, length, 33)
        sol = solve_mode_odes(np.array([0.0]), 0.7, np.zeros((33, 1)), np.array([1.0]), np.array([1.0]), x)
        assert np.abs(sol.a[:, 0] - (x - length / 2)).max() < 1e-14
        assert np.abs(sol.da[:, 0] - 1.0).max() < 1e-14
        assert sol.solvability_gap == 0.0


def test_zero_mode_with_source():
    x = np.linspace(0, 1, 65)
    f = np.cos(np.pi * x)[:, None] * 0.5  # coef a'' = f with a' = 0 at both ends
    sol = solve_mode_odes(np.array([0.0]), 0.5, f, np.zeros(1), np.zeros(1), x)
    exact = -np.cos(np.pi * x) / np.pi**2
    assert np.abs(sol.a[:, 0] - exact).max() < 1e-7


def test_zero_mode_solvability_violation_raises():
    x = np.linspace(0, 1, 33)
    with pytest.raises(ValueError, match="solvability"):
        solve_mode_odes(np.array([0.0]), 1.0, np.zeros((33, 1)), np.array([0.0]), np.array([1.0]), x)


def test_homogeneous_problem_has_only_trivial_solution():
    x = np.linspace(0, 1, 33)
    lam = np.array([0.0, 1.0, 40.0, 1e4])
    sol = solve_mode_odes(lam, 0.8, np.zeros((33, 4)), np.zeros(4), np.zeros(4), x)
    assert not np.any(sol.a) and not np.any(sol.da)


@given(st.floats(0.5, 200.0), st.integers(0, 10_000))
def test_energy_bound(lam, seed):
    """coef |a'|^2 + lam |a|^2 <= |f| |a| in L2 for homogeneous Neumann data."""
    x = np.linspace(0, 1, 65)
    f = np.random.default_rng(seed).normal(size=(65, 1))
    sol = solve_mode_odes(np.array([lam]), 1.0, f, np.zeros(1), np.zeros(1), x)
    a = sol.a[:, 0]
    l2 = lambda v: np.sqrt(np.trapezoid(v**2, x))  # noqa: E731
    assert lam * l2(a) <= 1.05 * l2(f[:, 0])


def test_rejects_bad_input():
    x = np.linspace(0, 1, 17)
    with pytest.raises(ValueError):
        solve_mode_odes(np.array([-1.0]), 1.0, np.zeros((17, 1)), np.zeros(1), np.zeros(1), x)
    with pytest.raises(ValueError):
        solve_mode_odes(np.array([1.0]), 0.0, np.zeros((17, 1)), np.zeros(1), np.zeros(1), x)


def test_residual_helper():
    x = np.linspace(0, 1, 65)
    f = np.sin(3 * x)
    ode = ModeODE(4.0, 1.0, f, 0.2, -0.1, x)
    a, _ = ode.solve()
    assert ode.residual(a) < 1e-5

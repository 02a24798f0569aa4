import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subsonic_euler import AdmissibilityError, GasState, density_map
from subsonic_euler.gas import density_partials


def test_background_round_trip(gas):
    assert gas.B == pytest.approx(3.625, rel=1e-15)
    assert gas.c2 == pytest.approx(1.4)
    assert gas.mach2 == pytest.approx(0.17857142857142858, rel=1e-15)
    rho, c2, m2 = density_map(gas.B, gas.K, gas.u**2, gas.gamma)
    assert rho == pytest.approx(1.0, rel=1e-15) and c2 == pytest.approx(1.4)


def test_doubling_entropy_scales_density(gas):
    rho1, _, _ = density_map(gas.B, 1.0, 0.25, 1.4)
    rho2, _, _ = density_map(gas.B, 2.0, 0.25, 1.4)
    assert rho2 / rho1 == pytest.approx(2 ** (-1 / 0.4), rel=1e-14)


@given(st.floats(0.2, 3.0), st.floats(0.05, 0.9), st.floats(0.2, 4.0), st.floats(1.05, 3.0))
def test_bernoulli_round_trip(rho, mach, K, gamma):
    c2 = gamma * K * rho ** (gamma - 1)
    speed2 = mach**2 * c2
    B = 0.5 * speed2 + c2 / (gamma - 1)
    H, c2b, m2 = density_map(B, K, speed2, gamma)
    assert H == pytest.approx(rho, rel=1e-12)
    assert 0.5 * speed2 + gamma * K * H ** (gamma - 1) / (gamma - 1) == pytest.approx(B, rel=1e-12)
    assert m2 == pytest.approx(mach**2, rel=1e-10)


def test_partials_match_differences(gas):
    B, K, s = gas.B + 0.01, 1.1, 0.3
    dB, dK, ds = density_partials(B, K, s, 1.4)
    eps = 1e-6
    f = lambda b, k, q: density_map(b, k, q, 1.4)[0]  # noqa: E731
    assert dB == pytest.approx((f(B + eps, K, s) - f(B - eps, K, s)) / (2 * eps), rel=1e-7)
    assert dK == pytest.approx((f(B, K + eps, s) - f(B, K - eps, s)) / (2 * eps), rel=1e-7)
    assert ds == pytest.approx((f(B, K, s + eps) - f(B, K, s - eps)) / (2 * eps), rel=1e-7)


def test_rejections():
    with pytest.raises(ValueError, match="subsonic"):
        GasState(u=2.0)
    with pytest.raises(ValueError):
        GasState(gamma=1.0)
    with pytest.raises(AdmissibilityError):
        density_map(1.0, 1.0, 3.0, 1.4)
    with pytest.raises(AdmissibilityError):
        density_map(3.625, -1.0, 0.25, 1.4)
    with pytest.raises(AdmissibilityError, match="subsonic"):
        density_map(3.625, 1.0, 5.0, 1.4)

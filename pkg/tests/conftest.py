import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from subsonic_euler import BoundaryData, DiskSection, GasState, Grid3, Profile, RectangleSection, build_eigenbasis

settings.register_profile("repo", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def gas():
    return GasState(rho=1.0, u=0.5, K=1.0, gamma=1.4)


@pytest.fixture(scope="session")
def square17():
    sec = RectangleSection(1.0, 1.0, 17, 17)
    return Grid3(1.0, 17, sec)


@pytest.fixture(scope="session")
def square17_basis(square17):
    return build_eigenbasis(square17.section)


@pytest.fixture(scope="session")
def disk17():
    return Grid3(1.0, 17, DiskSection(1.0, 17, 32))


def square_data(sigma: float) -> BoundaryData:
    """Smooth data vanishing to fourth order on the walls of a rectangle, compatible mass fluxes."""
    P = Profile.parse
    return BoundaryData(sigma, m0=P("cosine-mode(1, 0)"), mL=P("cosine-mode(0, 1)"),
                        J0=P("sine-bump(1.0, 4)"), B0=P("sine-bump(1.0, 4)"), K0=P("sine-bump(0.5, 4)"))


def rng(seed=0):
    return np.random.default_rng(seed)


ACCEPTANCE = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")

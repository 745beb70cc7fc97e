import math

import pytest
from hypothesis import HealthCheck, settings

from cavity_cz import GaussianSpec, gaussian_packet, make_grid, spectral_fwhm

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

OMEGA_G = spectral_fwhm(1.0)


@pytest.fixture(scope="session")
def omega_g():
    return OMEGA_G


def centred_packet(duration=10.0, dt=0.01, fwhm=1.0):
    grid = make_grid(duration, dt)
    return gaussian_packet(grid, GaussianSpec(0.5 * duration, fwhm))


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

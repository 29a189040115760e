import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from diffbeam.codebook import build_transition_table, cyclic_codebook, generate_glp_codebook

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cb64():
    return cyclic_codebook(4, 64)


@pytest.fixture(scope="session")
def tt64(cb64):
    return build_transition_table(cb64)


@pytest.fixture(scope="session")
def cb8():
    return generate_glp_codebook(2, 8, seed=3, restarts=2, iterations=800)


@pytest.fixture(scope="session")
def tt8(cb8):
    return build_transition_table(cb8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

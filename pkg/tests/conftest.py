import numpy as np
import pytest

from routechoice.synthgen import GeneratorParams, generate_instance

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_instance():
    """8x8 grid, 30 pairs, three groups; cheap enough for every unit test."""
    return generate_instance(GeneratorParams(grid_side=8, num_od=30, q=3, seed=3))


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from faddeev.solver import PotentialConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def one_point_3d():
    return PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0)])


@pytest.fixture
def two_point_3d():
    return PotentialConfig.from_points(3, 4.0, [((0.0, 0.0, 0.0), 3.0), ((0.4, 0.1, -0.3), 2.0)])


@pytest.fixture
def two_point_2d():
    return PotentialConfig.from_points(2, 4.0, [((0.0, 0.0), 5.0), ((0.5, 0.0), 6.0)])


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record the one-line pass/fail summary of an acceptance criterion."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

import numpy as np
import pytest

from dispersa.spectral import Grid1D


@pytest.fixture
def grid():
    return Grid1D(256, 40.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gaussian(grid, width=1.0, center=0.0, amp=1.0, time=0.0):
    return grid.field(amp * np.exp(-((grid.x - center) / width) ** 2), time)


def tone(grid, k, phase=0.0):
    """cos(xi_k x + phase) on the grid, for integer mode number k."""
    xi = k * grid.dxi
    return xi, grid.field(np.cos(xi * grid.x + phase))


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``record(number, passed, detail)`` logs one line and asserts ``passed``."""
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert passed, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

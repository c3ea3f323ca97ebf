import numpy as np
import pytest

from modns.grid import make_grid


@pytest.fixture(scope="session")
def g2():
    return make_grid(2, 4, 4)


@pytest.fixture(scope="session")
def g2_small():
    return make_grid(2, 4, 2)


@pytest.fixture(scope="session")
def g3():
    return make_grid(3, 4, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion_line():
    """Record the one-line verdict of an acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[n])

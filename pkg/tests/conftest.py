import numpy as np
import pytest

from elastobem.geometry import make_cuboid, make_fichera
from elastobem.kernels import MaterialParams


@pytest.fixture(scope="session")
def mat():
    return MaterialParams(0.2778, 0.4167)


@pytest.fixture(scope="session")
def cuboid0():
    return make_cuboid(level=0)


@pytest.fixture(scope="session")
def cuboid1():
    return make_cuboid(level=1)


@pytest.fixture(scope="session")
def fichera0():
    return make_fichera(level=0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


# one summary line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def record_criterion(n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])

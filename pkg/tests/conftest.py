import numpy as np
import pytest

from kvbf.mesh import build_structured
from kvbf.spaces import build_spaces

UNIT = (0.0, 1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def unit_mesh4():
    return build_structured(UNIT, 4)


@pytest.fixture(scope="session", params=["taylor_hood", "mini"])
def spaces3(request):
    return build_spaces(build_structured(UNIT, 3), request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(name: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

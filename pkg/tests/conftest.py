import pytest

from qkdcoexist import config
from qkdcoexist.optics import FiberLink

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fitted():
    return config.load_params()


@pytest.fixture
def link50():
    return FiberLink(length_km=50.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from cascade_sim.model import default_params


@pytest.fixture
def write_params():
    return default_params("write")


@pytest.fixture
def read_params():
    return default_params("read")


@pytest.fixture
def memory_params():
    return default_params("memory")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

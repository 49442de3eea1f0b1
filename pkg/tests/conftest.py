import pytest

from graphing_lab import GOLDEN, golden_rotation, golden_rotation_cut, k3


@pytest.fixture(scope="session")
def calpha():
    return golden_rotation()


@pytest.fixture(scope="session")
def cprime():
    return golden_rotation_cut()


@pytest.fixture(scope="session")
def tri():
    return k3()


@pytest.fixture(scope="session")
def alpha():
    return GOLDEN


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

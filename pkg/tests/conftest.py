import pytest

from frontblock.nonlinearity import make_cubic
from frontblock.wave1d import ShiftFunction, solve_wave


@pytest.fixture(scope="session")
def cubic():
    return make_cubic(0.25)


@pytest.fixture(scope="session")
def wave(cubic):
    return solve_wave(cubic)


@pytest.fixture(scope="session")
def shift(wave):
    return ShiftFunction.for_wave(wave)


# one summary line per acceptance criterion, printed after the run
_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance_report():
    def report(number, title, passed, detail):
        _ACCEPTANCE[number] = (title, passed, detail)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {n:2d} {title}: {detail}")

import pytest

from regrad import _kernels
from regrad.theory import WaveState

PAIR = ("a", "a'")


@pytest.fixture(scope="session", autouse=True)
def _jit_warm():
    _kernels.warmup()


def ws(*amps, slits=PAIR):
    return WaveState(tuple(slits), tuple(amps))


# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{n}] {title}: {detail}")

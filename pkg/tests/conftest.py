import pytest

from etcor import regulator, sim
from etcor.plant import build_example_scenario

# acceptance verdicts, printed once at the end of the session
VERDICTS = {}


def record_verdict(number, passed, detail):
    VERDICTS[number] = (passed, detail)
    print(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        passed, detail = VERDICTS[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}")


@pytest.fixture(scope="session")
def example():
    return build_example_scenario()


@pytest.fixture(scope="session")
def regs(example):
    return regulator.synthesize(example)[1]


@pytest.fixture(scope="session")
def full_run(example):
    """Dynamic run of the bundled example, every step recorded."""
    return sim.run(example.with_integrator(decimate=1))

import numpy as np
import pytest

from cyberhawkes import EventStream, PhaseOneParams, ReactionParams

BENCH = dict(lambda0=0.6, rho=0.2, mbar=0.8, m=0.5, delta=1.5)
NVD = dict(lambda0=2.4195, rho=48.849, mbar=0.077413, m=0.67139, delta=1.8697)


@pytest.fixture
def bench():
    return PhaseOneParams(**BENCH)


@pytest.fixture
def bench_reaction():
    return ReactionParams(ell=3.0, alpha0=0.8, alpha1=0.5, m_al=0.25)


@pytest.fixture
def nvd():
    return PhaseOneParams(**NVD)


def stream(internal=(), external=(), t0=0.0, s=None, tau=10.0):
    return EventStream(t0, t0 if s is None else s, tau,
                       np.asarray(internal, float), np.asarray(external, float))


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES,
                           key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

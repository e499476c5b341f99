import numpy as np
import pytest

from etcdelay.bounds import certify_constants
from etcdelay.chatter import (
    build_chatter_certificate,
    build_chatter_model,
    build_chatter_trigger,
)
from etcdelay.engine import IntegratorConfig, simulate, simulate_continuous


@pytest.fixture(scope="session")
def chatter_model():
    return build_chatter_model()


@pytest.fixture(scope="session")
def chatter_cert():
    return build_chatter_certificate()


@pytest.fixture(scope="session")
def chatter_trig():
    return build_chatter_trigger()


@pytest.fixture(scope="session")
def default_icfg():
    return IntegratorConfig(h=0.005, t_end=60.0)


@pytest.fixture(scope="session")
def chatter_run(chatter_model, chatter_trig, chatter_cert, default_icfg):
    return simulate(chatter_model, chatter_trig, chatter_cert, default_icfg)


@pytest.fixture(scope="session")
def chatter_feedback_run(chatter_model, chatter_cert, default_icfg):
    return simulate_continuous(chatter_model, default_icfg, chatter_cert)


@pytest.fixture(scope="session")
def chatter_constants(chatter_model, chatter_trig, chatter_cert):
    return certify_constants(chatter_model, chatter_trig, chatter_cert, L=1.0, horizon=60.0,
                             samples=10_000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record (and print) one pass/fail line per acceptance criterion."""

    def report(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

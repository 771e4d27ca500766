import numpy as np
import pytest

import popsize as ps


@pytest.fixture(scope="session")
def bangkok():
    return ps.load_bangkok_frequencies()


@pytest.fixture(scope="session")
def heroin():
    return ps.load_heroin()


@pytest.fixture(scope="session")
def meth():
    return ps.load_methamphetamine()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    # acceptance lines are collected by tests/test_acceptance.py while it runs
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)

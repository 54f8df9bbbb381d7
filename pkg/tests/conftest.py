import numpy as np
import pytest
from hypothesis import settings

from nmukit.datasets import gen_swimmer

# numerical examples vary a lot in cost; timing is not what these tests check
settings.register_profile("nmukit", deadline=None)
settings.load_profile("nmukit")


@pytest.fixture(scope="session")
def swimmer():
    return gen_swimmer().matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion."""

    def record(label, ok, detail):
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)

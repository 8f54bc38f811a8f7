import numpy as np
import pytest

from stochwave import GridSpec

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def small_spec():
    return GridSpec(1.0, 32, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(
            f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

import math

import numpy as np
import pytest

from modelset_fb.cps import preset

TAU = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="session")
def fib():
    return preset("fibonacci")


@pytest.fixture(scope="session")
def silver():
    return preset("silver_mean")


@pytest.fixture(scope="session")
def ab():
    return preset("ammann_beenker")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; call as ``criterion(n, ok, detail)`` before asserting."""

    def record(n: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

import warnings

import pytest
from hypothesis import HealthCheck, settings

from beamase import FR1, FR2

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fr1_cfg():
    return FR1.config(500, 30)


@pytest.fixture(scope="session")
def fr2_cfg():
    return FR2.config(125, 30)


@pytest.fixture(autouse=True)
def _quiet_misalignment():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="beam misalignment probability")
        yield


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""

    def record(criterion: int, passed: bool, detail: str) -> None:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

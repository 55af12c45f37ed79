import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from distreg.wavelet import build_basis

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow,
                                                 HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def basis():
    return build_basis(order=4, regularity=1, resolution=14)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: list = []


@pytest.fixture
def criterion():
    """Record ``(name, passed, detail)`` for the end-of-run acceptance summary."""
    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")

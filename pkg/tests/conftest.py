import pytest

from fiberthomae.config import default_instance
from fiberthomae.thomae import Workbench

_benches = {}


def bench_for(n, m):
    """Shared, lazily built workbench of a default instance (periods, Abel
    map and Riemann constant are the expensive parts)."""
    if (n, m) not in _benches:
        _benches[(n, m)] = Workbench(default_instance(n, m).curve)
    return _benches[(n, m)]


@pytest.fixture(scope="session")
def bench12():
    return bench_for(1, 2)


@pytest.fixture(scope="session")
def bench13():
    return bench_for(1, 3)


@pytest.fixture(scope="session")
def bench22():
    return bench_for(2, 2)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Context manager that times a block and records it as one acceptance line.

    A block fails if it raises or overruns ``limit`` seconds.
    """
    results = request.config.stash[_RESULTS]

    @contextmanager
    def run(label: str, limit: float | None = None):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            in_time = limit is None or elapsed < limit
            results.append((label, ok and in_time, elapsed, limit))
        if not in_time:
            pytest.fail(f"{label}: took {elapsed:.2f}s, limit {limit}s")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, elapsed, limit in results:
        budget = f"limit {limit:g}s" if limit is not None else "no limit"
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  {label}  ({elapsed:.2f}s, {budget})")

import time
from contextlib import contextmanager

import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion as PASS/FAIL, enforcing its time limit."""

    @contextmanager
    def run(number, title, limit_s):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException:
            _CRITERIA.append((number, title, False, time.perf_counter() - t0))
            print(f"[FAIL] criterion {number}: {title}")
            raise
        elapsed = time.perf_counter() - t0
        ok = elapsed < limit_s
        _CRITERIA.append((number, title, ok, elapsed))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({elapsed:.2f}s / {limit_s}s)")
        assert ok, f"criterion {number} took {elapsed:.2f}s, limit {limit_s}s"

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, elapsed in sorted(_CRITERIA):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number}. {title}  [{elapsed:.2f}s]")

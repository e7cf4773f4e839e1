import contextlib
import time

import pytest

_LINES: list[str] = []


class _Entry:
    def __init__(self, label):
        self.label = label
        self.detail = ""


@pytest.fixture
def acceptance():
    """``with acceptance("C1 ...") as entry:`` records one PASS/FAIL line.

    Assertion errors propagate unchanged, so a failing criterion fails its test.
    """

    @contextlib.contextmanager
    def record(label):
        entry = _Entry(label)
        start = time.perf_counter()
        try:
            yield entry
        except BaseException as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            line = f"FAIL {label} ({time.perf_counter() - start:.1f}s): {reason}"
            _LINES.append(line)
            print(line)
            raise
        line = f"PASS {label} ({time.perf_counter() - start:.1f}s)" + (f": {entry.detail}" if entry.detail else "")
        _LINES.append(line)
        print(line)

    return record


@pytest.fixture(scope="session")
def table250():
    from osequences.engine import run_iterative

    return run_iterative(250)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = {}


@pytest.fixture
def criterion(request):
    """``criterion(n, title, ok, detail)`` records an acceptance result and prints it."""
    def record(n, title, ok, detail=""):
        line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
        _RESULTS[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[n])

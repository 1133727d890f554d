import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def record(number: int, title: str, ok: bool, detail: str, seconds: float) -> None:
        status = "PASS" if ok else "FAIL"
        _CRITERIA.append(f"criterion {number:>2} {status}  {title}  [{detail}] ({seconds:.1f} s)")
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

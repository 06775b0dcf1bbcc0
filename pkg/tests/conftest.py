import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{n}] {title}: {detail}")


@pytest.fixture
def record():
    def _record(n: int, title: str, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (title, ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} [{n}] {title}: {detail}")

    return _record

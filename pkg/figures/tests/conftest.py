import os
from pathlib import Path

import pytest

os.environ.setdefault("MPLBACKEND", "Agg")

GOLDEN = Path(__file__).parent / "golden"

ACCEPTANCE_RESULTS: list = []


def record_acceptance(name: str, ok: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def golden() -> Path:
    return GOLDEN

from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "bimodal_nav" / "data"

# Filled by tests/test_acceptance.py, printed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

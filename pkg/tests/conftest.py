import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES = []


@pytest.fixture(autouse=True)
def _repo_cwd(monkeypatch):
    # demo files are referenced relative to the repository root
    monkeypatch.chdir(ROOT)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one primary acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        tr.write_line(line)
    os.environ.pop("COALCAN_ACCEPTANCE", None)

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rekodx import load_demo_module
from rekodx.model import ModuleIndex

GOLDEN_DIR = Path(__file__).parent / "golden"

# Acceptance criteria register their outcome here; a terminal-summary hook
# prints one line per criterion at the end of the run.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def med_module():
    return load_demo_module("demo_medical")


@pytest.fixture(scope="session")
def equip_module():
    return load_demo_module("demo_equipment")


@pytest.fixture(scope="session")
def med_index(med_module):
    return ModuleIndex(med_module)


@pytest.fixture(scope="session")
def equip_index(equip_module):
    return ModuleIndex(equip_module)


@pytest.fixture(scope="session")
def goldens():
    path = GOLDEN_DIR / "goldens.json"
    if not path.exists():
        pytest.fail(f"golden file {path} missing; run tests/pin_goldens.py")
    return json.loads(path.read_text(encoding="utf-8"))

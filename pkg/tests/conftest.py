import json
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for rep in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []):
        if rep.when != "call":
            continue
        for key, value in rep.user_properties:
            if key == "acceptance":
                lines.append((rep.nodeid, "PASS" if rep.passed else "FAIL", value))
    if lines:
        terminalreporter.section("acceptance")
        for nodeid, status, text in sorted(lines):
            terminalreporter.write_line(f"{status}  {nodeid.split('::')[-1]}: {text}")

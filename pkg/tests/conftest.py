from __future__ import annotations

from collections import defaultdict

import numpy as np
import pytest

CRITERIA = {
    1: "associator determinant of the golden triple",
    2: "LV bipermutative axioms",
    3: "Lambda compatibility",
    4: "determinant multiplicativity",
    5: "pentagon sign cocycle",
    6: "orientation solver",
    7: "gerbe retraction",
    8: "connective existence",
    9: "transport compatibility",
    10: "chain-weight identity",
}

_outcomes: dict[int, list[bool]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key in report.keywords:
        if key.startswith("criterion_"):
            _outcomes[int(key.split("_")[1])].append(report.outcome == "passed")


def pytest_collection_modifyitems(items):
    # turn criterion(n) markers into keywords the report hook can see
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.keywords[f"criterion_{m.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        runs = _outcomes.get(n)
        if not runs:
            status = "NOT RUN"
        else:
            status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {n:2d} {status:7s} {name}")

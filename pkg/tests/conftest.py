"""Shared fixtures and the acceptance summary hook.

Acceptance tests carry a ``criterion`` marker; after the run one PASS/FAIL
line per criterion is printed so the gate can be read off directly.
"""

import json
from importlib import resources

import numpy as np
import pytest

from flexcz.grid import load_case
from flexcz.sets import HPolytope

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(num, label): acceptance criterion covered by this test")


def case_path(name: str) -> str:
    return str(resources.files("flexcz") / "cases" / name)


@pytest.fixture(scope="session")
def case4_path() -> str:
    return case_path("case4dist_ext.json")


@pytest.fixture(scope="session")
def case15_path() -> str:
    return case_path("case15_ext.json")


@pytest.fixture(scope="session")
def case4():
    return load_case(case_path("case4dist_ext.json"))


@pytest.fixture(scope="session")
def case15():
    return load_case(case_path("case15_ext.json"))


def load_poly_fixture(name: str) -> HPolytope:
    doc = json.loads((resources.files("flexcz") / "cases" / name).read_text())
    n = int(doc["dim"])
    b = np.asarray(doc["b_ineq"], dtype=float)
    A = np.asarray(doc["A_ineq"], dtype=float).reshape(b.shape[0], n)
    return HPolytope.from_inequalities(A, b)


@pytest.fixture(scope="session")
def cube3() -> HPolytope:
    return load_poly_fixture("cube3.json")


@pytest.fixture(scope="session")
def simplex3() -> HPolytope:
    return load_poly_fixture("simplex3.json")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        num = int(marker.args[0])
        label = str(marker.args[1])
        _CRITERIA[num] = (label, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        label, verdict = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num} ({label}): {verdict}")

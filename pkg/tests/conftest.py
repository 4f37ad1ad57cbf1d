import os
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from toposqt import linalg as la  # noqa: E402
from toposqt.contexts import generate_poset, standard_seed  # noqa: E402
from toposqt.scenario import load_scenario  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def p14():
    return generate_poset(4, [standard_seed(4)], closure="full")


@pytest.fixture(scope="session")
def p11():
    return generate_poset(4, [standard_seed(4)], closure="singleton")


@pytest.fixture(scope="session")
def spin():
    return load_scenario(SCENARIOS / "spin.json")


@pytest.fixture(scope="session")
def spin_full():
    return load_scenario(SCENARIOS / "spin_full.json")


@pytest.fixture(scope="session")
def sz():
    return la.resolved(la.diag(2, 0, 0, -2))


# ------------------------------------------------------------ acceptance summary

_ACCEPT = {}
_XFAIL = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" in report.nodeid and report.when == "call" and hasattr(report, "wasxfail"):
        _XFAIL.append((report.nodeid.split("::")[-1], report.wasxfail))
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        prev = _ACCEPT.get(name)
        _ACCEPT[name] = "FAIL" if report.failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPT, key=lambda n: int(n.split("_")[2])):
        terminalreporter.write_line(f"{_ACCEPT[name]}  {name}")
    for name, why in _XFAIL:
        terminalreporter.write_line(f"XFAIL {name}: {why}")

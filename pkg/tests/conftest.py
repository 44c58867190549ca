import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qenum.dynamics import MachineRun  # noqa: E402
from qenum.machines import BUILTINS  # noqa: E402

_RUNS = {}
ACCEPTANCE = {}


def run_of(name):
    if name not in _RUNS:
        _RUNS[name] = MachineRun.from_spec(BUILTINS[name])
    return _RUNS[name]


@pytest.fixture
def runs():
    return run_of


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        # several tests may share a criterion; any failure fails it
        previous = ACCEPTANCE.get(number, (title, "passed"))[1]
        ACCEPTANCE[number] = (title, report.outcome if previous == "passed" else previous)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, outcome = ACCEPTANCE[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle.json").read_text())


# one PASS/FAIL line per acceptance check, printed after the run
_ACCEPTANCE: list = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__ != "test_acceptance" or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if hasattr(item, "callspec"):
        title += f" [{item.callspec.id}]"
    if hasattr(report, "wasxfail"):
        line = f"FAIL  {title}  [expected failure: {report.wasxfail}]"
    elif report.passed:
        line = f"PASS  {title}"
    else:
        line = f"FAIL  {title}"
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)

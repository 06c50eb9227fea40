from __future__ import annotations

import pytest

_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    label = str(mark.args[0])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if report.failed or label not in _results or report.when == "call":
            _results[label] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_results, key=lambda x: (len(x), x)):
        terminalreporter.write_line(f"criterion {label}: {_results[label]}")

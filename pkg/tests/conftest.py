from __future__ import annotations

import pytest

_ACCEPTANCE: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): test that decides acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    k = int(marker.args[0])
    if report.failed:
        _ACCEPTANCE[k] = "FAIL"
    elif report.when == "call" and report.passed:
        _ACCEPTANCE.setdefault(k, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"ACCEPTANCE criterion {k}: {_ACCEPTANCE[k]}")

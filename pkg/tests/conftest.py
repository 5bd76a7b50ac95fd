"""Prints one PASS/FAIL line per acceptance criterion at the end of the run.

Acceptance tests carry ``@pytest.mark.criterion(n, title)``; a test may attach
a ``("verdict", text)`` user property to override the line (used by soft checks)
and ``("detail", text)`` for the measured values.
"""

import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")
    config.stash[_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        n, title = marker.args
        props = dict(item.user_properties)
        verdict = props.get("verdict", "PASS" if report.passed else "FAIL")
        item.config.stash[_KEY][n] = (title, verdict, props.get("detail", ""))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, verdict, detail = results[n]
        line = f"[{verdict}] {n}. {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))

"""Per-criterion summary for the acceptance suite.

Acceptance tests carry ``@pytest.mark.acceptance(n, title)`` and may attach
a measured-value string through the ``measured`` fixture. One PASS/FAIL line
per criterion is printed at the end of the run.
"""

import pytest

_outcomes = {}


@pytest.fixture
def measured(request):
    """Call with a short string describing what was measured."""

    def note(text):
        request.node.user_properties.append(("measured", text))

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    notes = [v for k, v in item.user_properties if k == "measured"]
    prev = _outcomes.get(number, (True, title, []))
    _outcomes[number] = (prev[0] and report.passed, title, prev[2] + notes)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        ok, title, notes = _outcomes[number]
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        if notes:
            line += " | " + "; ".join(notes)
        terminalreporter.write_line(line)

"""Acceptance reporting: one PASS/FAIL line per numbered criterion in the terminal summary."""

import pytest

_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}
_titles: dict[int, str] = {}


@pytest.fixture
def report(request):
    """Attach a measurement line to the current test's criterion."""
    marker = request.node.get_closest_marker("acceptance")
    num = marker.args[0] if marker else None

    def add(text: str) -> None:
        _details.setdefault(num, []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num = marker.args[0]
    if len(marker.args) > 1:
        _titles[num] = marker.args[1]
    if rep.when == "call" or rep.failed:
        _outcomes.setdefault(num, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        status = "PASS" if all(_outcomes[num]) else "FAIL"
        detail = "; ".join(_details.get(num, []))
        line = f"criterion {num:2d} {status}  {_titles.get(num, '')}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))

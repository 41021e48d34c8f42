"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.fixture
def measured(request):
    """Dict a criterion test fills with the numbers worth reporting."""
    marker = request.node.get_closest_marker("criterion")
    store: dict = {}
    if marker is not None:
        _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "values": store})["values"] = store
    return store


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    entry = _RESULTS.setdefault(marker.args[0], {"title": marker.args[1], "values": {}})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["outcome"] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in entry["values"].items())
        line = f"[{entry.get('outcome', 'NOT RUN'):>4}] {number:2d}. {entry['title']}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))

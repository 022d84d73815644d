import pytest

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "failed": [], "ran": 0})
    if rep.when == "call":
        entry["ran"] += 1
    if rep.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {verdict}  {entry['title']} ({entry['ran']} checks"
        line += f", failing: {', '.join(entry['failed'])})" if entry["failed"] else ")"
        tr.write_line(line)

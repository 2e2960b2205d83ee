import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _results.get(marker)
        failed = report.outcome != "passed" or (prev is not None and prev[0] == "FAIL")
        _results[marker] = ("FAIL" if failed else "PASS", report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, title), (verdict, duration) in sorted(_results.items()):
        terminalreporter.write_line(f"{verdict} criterion {n:>2}: {title} ({duration:.2f} s)")

import numpy as np
import pytest

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    num, title = getattr(report, "_acceptance", (None, None))
    if num is not None:
        _ACCEPTANCE[num] = (title, report.outcome, report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep._acceptance = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, outcome, dur = _ACCEPTANCE[num]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {num:2d} {status}  {title}  ({dur:.1f} s)")


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)

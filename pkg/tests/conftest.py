"""Replay the acceptance-criterion verdict lines after the test run."""

_CRITERION_LINES = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    for line in report.capstdout.splitlines():
        if line.startswith(("PASS criterion", "FAIL criterion")):
            _CRITERION_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERION_LINES, key=lambda s: int(s.split(":")[0].split()[-1])):
        terminalreporter.write_line(line)

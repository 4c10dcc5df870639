import re

_acceptance_results = {}


def pytest_runtest_logreport(report):
    # Collect one line per acceptance criterion for the session summary.
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_c(\d+)([a-z]?)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    label = m.group(3).replace("_", " ")
    _acceptance_results[key] = (label, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (num, sub), (label, outcome) in sorted(_acceptance_results.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}{sub or ' '} [{status}] {label}")

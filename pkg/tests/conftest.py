import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")
_TITLES = {
    1: "example programs in all three semantics",
    2: "divergence times out everywhere",
    3: "typing goldens",
    4: "fixpoint unfolding",
    5: "property suite",
    6: "differential testing",
    7: "interconvertibility with values",
}
_outcomes: dict = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.failed:
        _outcomes[number] = "FAIL"
    elif report.when == "call":
        _outcomes.setdefault(number, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, outcome in sorted(_outcomes.items()):
        terminalreporter.write_line(f"criterion {number} ({_TITLES[number]}): {outcome}")

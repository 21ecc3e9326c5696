import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        details = [v for k, v in item.user_properties if k == "measured"]
        _criteria.append((mark.args[0], mark.args[1], rep.outcome.upper(), details))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num, text, outcome, details in sorted(_criteria, key=lambda c: str(c[0])):
        verdict = "PASS" if outcome == "PASSED" else "FAIL"
        line = f"criterion {num}: {verdict}  {text}"
        if details:
            line += "  [" + "; ".join(details) + "]"
        terminalreporter.write_line(line)

import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, name, passed, detail)``."""

    def record(number, name, passed, detail=""):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        line = f"criterion {number} {name}: {status}" + (f" ({detail})" if detail else "")
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)

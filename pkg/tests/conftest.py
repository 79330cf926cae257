import pytest

CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, passed, detail)."""
    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
        CRITERIA.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(CRITERIA):
        terminalreporter.write_line(line)

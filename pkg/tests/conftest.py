import pytest

_LINES = []


@pytest.fixture
def report():
    """Print a one-line acceptance verdict and keep it for the session summary."""

    def emit(criterion, ok, detail):
        line = f"{'PASS' if ok is True else 'FAIL' if ok is False else 'SKIP'}  [{criterion}] {detail}"
        _LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)

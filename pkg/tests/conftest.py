import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record a one-line verdict that is echoed in the terminal summary."""
    def record(criterion: str, passed: bool, detail: str, seconds: float) -> None:
        _ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion:<34} {seconds:7.2f}s  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

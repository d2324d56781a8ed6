import pytest

_criterion_lines: list[str] = []


@pytest.fixture(scope="session")
def record_line():
    """Collect one pass/fail line per acceptance criterion; printed at the
    end of the run so the verdicts survive a long -v transcript."""

    def _record(text: str) -> None:
        _criterion_lines.append(text)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_criterion_lines):
        terminalreporter.write_line(line)

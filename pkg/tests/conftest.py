import pytest

from acsdx.study import run_study

# one line per acceptance check, echoed at the end of the run
CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session")
def study42():
    """The standard seed-42 replication run, shared across the suite."""
    return run_study(42)


@pytest.fixture
def criterion():
    def record(line: str) -> None:
        CRITERION_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)

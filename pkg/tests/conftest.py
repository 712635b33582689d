import pytest

from convval import corpus


@pytest.fixture
def tent():
    return corpus.tent()


@pytest.fixture
def bump():
    return corpus.bump()


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_log():
    """Collects one pass/fail line per acceptance criterion for the summary."""
    def log(line):
        print(line)
        ACCEPTANCE_LINES.append(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)

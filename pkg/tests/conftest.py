import random

import pytest

from blockabe.abe import setup

CRITERIA: list[str] = []


def record(number: int, passed: bool, detail: str) -> None:
    """Log one acceptance verdict; all of them are echoed in the terminal summary."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def params():
    return setup(rng=random.Random(2024))


@pytest.fixture
def rng():
    return random.Random(7)

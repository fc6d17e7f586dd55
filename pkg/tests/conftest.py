import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: list[tuple[str, bool, str]] = []


class ScriptedRNG:
    """Stand-in generator whose ``random()`` replays fixed values.

    ``force(1)`` is 0.0 (fires whenever P(1) > 0); ``force(0)`` is just
    below 1.0 (fires only when P(1) == 1).
    """

    def __init__(self, values):
        self.values = list(values)

    @staticmethod
    def force(bit):
        return 0.0 if bit else 1.0 - 2.0 ** -53

    def random(self):
        return self.values.pop(0)


@pytest.fixture
def scripted():
    return ScriptedRNG


@pytest.fixture
def acceptance_record():
    def record(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memimprint.domain import AlterAnswer, Channel, Dataset, Event, Question, SurveyResponse  # noqa: E402

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line for the acceptance summary."""

    def record(label: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {label} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}  {detail}")


@pytest.fixture
def tiny():
    """Three events between a, b, c plus surveys for egos a and b."""
    events = [
        Event(30, "a", "c", Channel.CALL, 60),
        Event(10, "a", "b"),
        Event(20, "b", "a"),
    ]
    qs = [Question("closeness", "ordinal", ("far", "near", "close")), Question("duration", "rational")]
    surveys = [
        SurveyResponse("a", 100, 1, (AlterAnswer("b", {"closeness": 2}, 1.0), AlterAnswer("c", {"closeness": 1}, 3.0))),
        SurveyResponse("a", 200, 2, (AlterAnswer("b", {"closeness": 2}, 1.5),)),
        SurveyResponse("b", 100, 1, (AlterAnswer("a", {"closeness": 2}, 1.0),)),
        SurveyResponse("b", 200, 2, ()),
    ]
    return Dataset.build("tiny", events, surveys, qs)

"""Core data model: events, survey responses, question schema and datasets.

Timestamps are integer seconds since the epoch. Model kernels work in hours;
the conversion happens only there (see ``HOUR``).
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import ConfigError, SchemaError, UnknownParticipant

log = logging.getLogger(__name__)

HOUR = 3600
MAX_ALTERS = 20


class Channel(str, Enum):
    CALL = "call"
    TEXT = "text"


@dataclass(frozen=True, order=True, slots=True)
class Event:
    timestamp: int
    sender: str
    receiver: str
    channel: Channel = Channel.TEXT
    length: int = 0

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        if self.sender == self.receiver:
            raise ValueError(f"self-directed event for {self.sender!r}")
        if self.length < 0:
            raise ValueError(f"negative length {self.length}")
        if not isinstance(self.channel, Channel):
            object.__setattr__(self, "channel", Channel(self.channel))

    @property
    def sort_key(self):
        return (self.timestamp, self.sender, self.receiver, self.channel.value)


@dataclass(frozen=True)
class Question:
    """One name-interpreter question.

    ``levels`` are listed from most distant to closest, so with the default
    direction a larger ordinal level means closer to the ego. Rational
    questions read the alter's ``duration`` answer.
    """

    id: str
    kind: str = "ordinal"
    levels: tuple[str, ...] = ()
    direction: str = "higher_is_closer"

    def __post_init__(self):
        if self.kind not in ("ordinal", "rational"):
            raise SchemaError(f"question {self.id!r}: unknown kind {self.kind!r}")
        if self.direction not in ("higher_is_closer", "lower_is_closer"):
            raise SchemaError(f"question {self.id!r}: unknown direction {self.direction!r}")
        if self.kind == "ordinal" and len(self.levels) < 2:
            raise SchemaError(f"ordinal question {self.id!r} needs at least two levels")
        object.__setattr__(self, "levels", tuple(self.levels))

    def closeness(self, value: float) -> float:
        return value if self.direction == "higher_is_closer" else -value


@dataclass(frozen=True)
class AlterAnswer:
    alter: str
    graded_answers: Mapping[str, int] = field(default_factory=dict)
    duration: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.duration) or self.duration < 0:
            raise ValueError(f"alter {self.alter!r}: bad duration {self.duration}")


@dataclass(frozen=True)
class SurveyResponse:
    ego: str
    survey_time: int
    semester_index: int
    alters: tuple[AlterAnswer, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alters", tuple(self.alters))
        if self.semester_index < 1:
            raise ValueError(f"semester index must be positive, got {self.semester_index}")
        if len(self.alters) > MAX_ALTERS:
            raise ValueError(f"ego {self.ego!r} lists {len(self.alters)} alters (max {MAX_ALTERS})")
        ids = [a.alter for a in self.alters]
        if len(set(ids)) != len(ids):
            raise ValueError(f"ego {self.ego!r} lists an alter twice at {self.survey_time}")


@dataclass(frozen=True)
class RankedList:
    ego: str
    at: int
    entries: tuple[tuple[str, float], ...] = ()

    @property
    def alters(self) -> list[str]:
        return [a for a, _ in self.entries]

    def __len__(self):
        return len(self.entries)


def _validate_answers(survey: SurveyResponse, schema: Mapping[str, Question]):
    for answer in survey.alters:
        for qid, level in answer.graded_answers.items():
            q = schema.get(qid)
            if q is None:
                raise SchemaError(f"ego {survey.ego!r}, alter {answer.alter!r}: unknown question {qid!r}")
            if q.kind != "ordinal":
                raise SchemaError(f"question {qid!r} is rational; its answer is the duration field")
            if not 0 <= level < len(q.levels):
                raise SchemaError(
                    f"ego {survey.ego!r}, alter {answer.alter!r}: level {level} outside "
                    f"0..{len(q.levels) - 1} for {qid!r}"
                )


@dataclass(frozen=True)
class Dataset:
    """Immutable dataset. Build through :meth:`build` to get sorting and checks."""

    name: str
    events: tuple[Event, ...]
    surveys: tuple[SurveyResponse, ...]
    questions: tuple[Question, ...]

    @classmethod
    def build(
        cls,
        name: str,
        events: Iterable[Event],
        surveys: Iterable[SurveyResponse],
        questions: Iterable[Question],
    ) -> "Dataset":
        events = tuple(sorted(events, key=lambda e: e.sort_key))
        questions = tuple(questions)
        qids = [q.id for q in questions]
        if len(set(qids)) != len(qids):
            raise SchemaError("duplicate question ids in schema")
        if sum(q.kind == "rational" for q in questions) > 1:
            raise SchemaError("at most one rational question (the duration answer) is supported")
        schema = {q.id: q for q in questions}
        surveys = tuple(sorted(surveys, key=lambda s: (s.ego, s.semester_index)))
        last: dict[str, SurveyResponse] = {}
        for s in surveys:
            _validate_answers(s, schema)
            prev = last.get(s.ego)
            if prev is not None:
                if prev.semester_index == s.semester_index:
                    raise ValueError(f"ego {s.ego!r} has two surveys for semester {s.semester_index}")
                if prev.survey_time >= s.survey_time:
                    raise ValueError(f"ego {s.ego!r}: survey times not increasing across semesters")
            last[s.ego] = s
        return cls(name, events, surveys, questions)

    @property
    def schema(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}

    @cached_property
    def timestamps(self) -> np.ndarray:
        return np.fromiter((e.timestamp for e in self.events), dtype=np.int64, count=len(self.events))

    @cached_property
    def _dyads(self) -> dict[str, dict[str, np.ndarray]]:
        # undirected: each event is filed under both endpoints
        idx: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
        for i, e in enumerate(self.events):
            idx[e.sender][e.receiver].append(i)
            idx[e.receiver][e.sender].append(i)
        return {p: {q: np.asarray(v, dtype=np.int64) for q, v in others.items()} for p, others in idx.items()}

    @cached_property
    def egos(self) -> tuple[str, ...]:
        return tuple(sorted({s.ego for s in self.surveys}))

    @cached_property
    def participants(self) -> frozenset[str]:
        return frozenset(self.egos) | frozenset(self._dyads)

    @cached_property
    def surveys_by_ego(self) -> dict[str, tuple[SurveyResponse, ...]]:
        out: dict[str, list[SurveyResponse]] = defaultdict(list)
        for s in self.surveys:
            out[s.ego].append(s)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def semesters(self) -> tuple[int, ...]:
        return tuple(sorted({s.semester_index for s in self.surveys}))

    def wave_time(self, semester: int) -> int:
        """Earliest survey time of a semester's wave."""
        times = [s.survey_time for s in self.surveys if s.semester_index == semester]
        if not times:
            raise ConfigError(f"no surveys for semester {semester} in {self.name!r}")
        return min(times)

    def survey(self, ego: str, semester: int) -> Optional[SurveyResponse]:
        for s in self.surveys_by_ego.get(ego, ()):
            if s.semester_index == semester:
                return s
        return None

    def contacts(self, ego: str) -> dict[str, np.ndarray]:
        """Other party -> positions (into ``events``) of all events with ``ego``."""
        if ego not in self.participants:
            raise UnknownParticipant(ego)
        return self._dyads.get(ego, {})

    def dyad_times(self, ego: str, other: str, before: int) -> np.ndarray:
        pos = self.contacts(ego).get(other)
        if pos is None:
            return np.empty(0, dtype=np.int64)
        ts = self.timestamps[pos]
        return ts[: np.searchsorted(ts, before, side="left")]

    def restrict(
        self,
        egos: Iterable[str],
        semesters: Optional[Iterable[int]] = None,
        *,
        name: Optional[str] = None,
        renumber: bool = False,
        event_window: Optional[tuple[Optional[int], Optional[int]]] = None,
    ) -> "Dataset":
        """A view keeping only some egos' surveys (and their events)."""
        keep = set(egos)
        sems = sorted(set(semesters)) if semesters is not None else None
        remap = {s: i + 1 for i, s in enumerate(sems)} if (renumber and sems) else None
        surveys = []
        for s in self.surveys:
            if s.ego not in keep or (sems is not None and s.semester_index not in sems):
                continue
            if remap:
                s = SurveyResponse(s.ego, s.survey_time, remap[s.semester_index], s.alters)
            surveys.append(s)
        lo, hi = event_window if event_window else (None, None)
        events = [
            e
            for e in self.events
            if (e.sender in keep or e.receiver in keep)
            and (lo is None or e.timestamp >= lo)
            and (hi is None or e.timestamp < hi)
        ]
        return Dataset(name or self.name, tuple(events), tuple(surveys), self.questions)


def undirected_dyad_events(dataset: Dataset, ego: str, other: str, before: int) -> list[Event]:
    pos = dataset.contacts(ego).get(other)
    if pos is None:
        return []
    n = np.searchsorted(dataset.timestamps[pos], before, side="left")
    return [dataset.events[i] for i in pos[:n]]


def candidate_alters(dataset: Dataset, ego: str, before: int) -> set[str]:
    ts = dataset.timestamps
    return {other for other, pos in dataset.contacts(ego).items() if ts[pos[0]] < before}

"""Ground-truth alter rankings from survey answers via a pairwise tournament.

Every pair of listed alters meets on every schema question. The alter whose
answer is closer to the ego takes a point; equal answers give both a point.
A question left unanswered by either alter is skipped for that pair. Totals
are sorted descending, ties broken by the duration answer (longer first) and
then by ascending alter id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Optional

from .domain import MAX_ALTERS, AlterAnswer, Dataset, Question, SurveyResponse
from .errors import SchemaError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruthRanking:
    ego: str
    at: int
    semester_index: int
    ranked_alters: tuple[str, ...]
    points: Mapping[str, int]

    def __len__(self):
        return len(self.ranked_alters)


def _answer(alter: AlterAnswer, q: Question) -> Optional[float]:
    if q.kind == "rational":
        return alter.duration
    level = alter.graded_answers.get(q.id)
    return None if level is None else level


def tournament_rank(response: SurveyResponse, schema: Mapping[str, Question] | list[Question]) -> GroundTruthRanking:
    if not isinstance(schema, Mapping):
        schema = {q.id: q for q in schema}
    for a in response.alters:
        for qid in a.graded_answers:
            if qid not in schema:
                raise SchemaError(f"alter {a.alter!r} answers unknown question {qid!r}")

    points = {a.alter: 0 for a in response.alters}
    skipped = 0
    for q in schema.values():
        for x, y in combinations(response.alters, 2):
            ax, ay = _answer(x, q), _answer(y, q)
            if ax is None or ay is None:
                skipped += 1
                continue
            cx, cy = q.closeness(ax), q.closeness(ay)
            if cx >= cy:
                points[x.alter] += 1
            if cy >= cx:
                points[y.alter] += 1
    if skipped:
        log.info("ego %s at %s: %d comparisons skipped for missing answers",
                 response.ego, response.survey_time, skipped)

    order = sorted(response.alters, key=lambda a: (-points[a.alter], -a.duration, a.alter))
    ranked = tuple(a.alter for a in order)[:MAX_ALTERS]
    return GroundTruthRanking(response.ego, response.survey_time, response.semester_index, ranked, points)


def build_ground_truth(dataset: Dataset) -> dict[tuple[str, int], GroundTruthRanking]:
    schema = dataset.schema
    return {(s.ego, s.survey_time): tournament_rank(s, schema) for s in dataset.surveys}

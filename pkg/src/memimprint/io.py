"""Reading and writing datasets and evaluation reports.

Formats:

* events: CSV with header ``timestamp,sender,receiver,channel,length``
* surveys: JSON lines, one object per (ego, survey time)::

      {"ego": "E1", "survey_time": 1324000000, "semester": 1,
       "alters": [{"alter": "X", "answers": {"closeness": 3}, "duration": 2.5}]}

* schema: JSON ``{"questions": [{"id", "kind", "levels", "direction"}]}``
* dataset archive: a directory holding ``events.csv``, ``surveys.jsonl``,
  ``schema.json`` and ``dataset.json``
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .domain import AlterAnswer, Channel, Dataset, Event, Question, SurveyResponse
from .errors import ConfigError, ParseError
from .evaluation import EvalRecord, EvalReport
from .metrics import RboConfig

log = logging.getLogger(__name__)

EVENT_HEADER = ["timestamp", "sender", "receiver", "channel", "length"]
RECORD_HEADER = ["fold", "semester", "ego", "model", "rbo", "truth_len"]


@dataclass
class IngestReport:
    event_rows: int = 0
    events_accepted: int = 0
    survey_rows: int = 0
    rejected: Counter = field(default_factory=Counter)
    rejected_rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "event_rows": self.event_rows,
            "events_accepted": self.events_accepted,
            "survey_rows": self.survey_rows,
            "rejected": dict(sorted(self.rejected.items())),
            "rejected_rows": self.rejected_rows,
        }


def read_events(path, report: Optional[IngestReport] = None) -> list[Event]:
    report = report if report is not None else IngestReport()
    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != EVENT_HEADER:
            raise ParseError(f"expected header {','.join(EVENT_HEADER)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            report.event_rows += 1
            if len(row) != len(EVENT_HEADER):
                raise ParseError(f"expected {len(EVENT_HEADER)} fields, got {len(row)}", path, lineno)
            ts, sender, receiver, channel, length = (x.strip() for x in row)
            try:
                ts_i, length_i = int(ts), int(length)
            except ValueError:
                raise ParseError(f"timestamp and length must be integers: {row!r}", path, lineno) from None
            reason = None
            if channel not in (c.value for c in Channel):
                reason = "filtered channel"
            elif not sender or not receiver:
                reason = "missing participant"
            elif sender == receiver:
                reason = "sender equals receiver"
            elif ts_i < 0 or length_i < 0:
                reason = "negative value"
            if reason:
                report.rejected[reason] += 1
                report.rejected_rows.append({"file": path.name, "line": lineno, "reason": reason})
                continue
            out.append(Event(ts_i, sender, receiver, Channel(channel), length_i))
    report.events_accepted += len(out)
    for reason, n in report.rejected.items():
        log.warning("%s: rejected %d rows (%s)", path.name, n, reason)
    return out


def write_events(events, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for e in events:
            w.writerow([e.timestamp, e.sender, e.receiver, e.channel.value, e.length])


def _survey_from_obj(obj: dict) -> SurveyResponse:
    alters = tuple(
        AlterAnswer(a["alter"], {k: int(v) for k, v in a.get("answers", {}).items()}, float(a.get("duration", 0.0)))
        for a in obj.get("alters", [])
    )
    return SurveyResponse(obj["ego"], int(obj["survey_time"]), int(obj["semester"]), alters)


def read_surveys(path, report: Optional[IngestReport] = None) -> list[SurveyResponse]:
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(_survey_from_obj(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad survey record: {exc}", path, lineno) from None
    if report is not None:
        report.survey_rows += len(out)
    return out


def survey_to_obj(s: SurveyResponse) -> dict:
    return {
        "ego": s.ego,
        "survey_time": s.survey_time,
        "semester": s.semester_index,
        "alters": [
            {"alter": a.alter, "answers": dict(sorted(a.graded_answers.items())), "duration": a.duration}
            for a in s.alters
        ],
    }


def write_surveys(surveys, path):
    with Path(path).open("w") as fh:
        for s in surveys:
            fh.write(json.dumps(survey_to_obj(s), sort_keys=True) + "\n")


def read_schema(path) -> list[Question]:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
        return [
            Question(q["id"], q.get("kind", "ordinal"), tuple(q.get("levels", ())),
                     q.get("direction", "higher_is_closer"))
            for q in obj["questions"]
        ]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad question schema: {exc}", path) from None


def write_schema(questions, path):
    obj = {"questions": [asdict(q) for q in questions]}
    for q in obj["questions"]:
        q["levels"] = list(q["levels"])
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def ingest(events_path, surveys_path, schema_path, name: str = "dataset") -> tuple[Dataset, IngestReport]:
    report = IngestReport()
    events = read_events(events_path, report)
    surveys = read_surveys(surveys_path, report)
    questions = read_schema(schema_path)
    try:
        ds = Dataset.build(name, events, surveys, questions)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), surveys_path) from None
    return ds, report


def save_dataset(ds: Dataset, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_events(ds.events, d / "events.csv")
    write_surveys(ds.surveys, d / "surveys.jsonl")
    write_schema(ds.questions, d / "schema.json")
    (d / "dataset.json").write_text(json.dumps({"name": ds.name}, sort_keys=True) + "\n")
    return d


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    if not (d / "events.csv").exists():
        raise ConfigError(f"{d} is not a dataset archive (no events.csv)")
    meta = json.loads((d / "dataset.json").read_text()) if (d / "dataset.json").exists() else {}
    ds, _ = ingest(d / "events.csv", d / "surveys.jsonl", d / "schema.json", meta.get("name", d.name))
    return ds


def write_latent(latent: dict, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ego", "alter", "semester", "strength"])
        for (ego, alter, sem), v in sorted(latent.items()):
            w.writerow([ego, alter, sem, repr(v)])


def read_latent(path) -> dict:
    with Path(path).open(newline="") as fh:
        return {(r["ego"], r["alter"], int(r["semester"])): float(r["strength"]) for r in csv.DictReader(fh)}


def write_report(report: EvalReport, directory, config_hash: str, config: Optional[dict] = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with (d / "records.csv").open("w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_HEADER)
        for r in report.records:
            w.writerow([r.fold, r.semester, r.ego, r.model, repr(r.rbo), r.truth_len])
    with (d / "trials.jsonl").open("w") as fh:
        for t in report.trials:
            fh.write(json.dumps({"config_hash": config_hash, **t}, sort_keys=True) + "\n")
    summary = {"config_hash": config_hash, **report.summary()}
    if config is not None:
        summary["config"] = config
    (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return d


def read_report(directory) -> tuple[EvalReport, dict]:
    d = Path(directory)
    try:
        summary = json.loads((d / "summary.json").read_text())
        records = []
        with (d / "records.csv").open(newline="") as fh:
            first = fh.readline()
            if not first.startswith("# config_hash="):
                raise ParseError("records file lacks config hash line", d / "records.csv", 1)
            for r in csv.DictReader(fh):
                records.append(EvalRecord(r["fold"], int(r["semester"]), r["ego"], r["model"], float(r["rbo"]),
                                          int(r["truth_len"])))
    except FileNotFoundError as exc:
        raise ConfigError(f"missing report file: {exc.filename}") from None
    models = [m["model"] for m in summary["models"]]
    seen = []
    for r in records:
        if r.model not in seen:
            seen.append(r.model)
    report = EvalReport(summary["kind"], summary["label"], seen or models, records, RboConfig(**summary["rbo"]),
                        fitted=summary.get("fitted", []), sentinel=summary.get("sentinel", {}))
    return report, summary

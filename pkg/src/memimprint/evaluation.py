"""Staggered cross-validated and cross-dataset evaluation.

Within a dataset, egos are shuffled into three folds. For every fold and
every semester ``s >= 2`` the tunable models are fitted on the other folds'
surveys from earlier semesters, seeing only events before the previous wave
``T[s-1]``; then every model ranks the fold's egos at their semester-``s``
survey and is scored with RBO against the survey ground truth.

A :class:`LeakageSentinel` audits every training-data access of a release and
aborts the run with :class:`ProtocolViolation` on any access to test-fold
surveys, surveys at or after the test time, or events at or after the cutoff.
"""

from __future__ import annotations

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .batch import build_snapshot
from .domain import Dataset, SurveyResponse
from .errors import ConfigError, ProtocolViolation
from .groundtruth import GroundTruthRanking, build_ground_truth
from .metrics import RboConfig, rbo, weighted_mean_rbo
from .models import ModelSpec
from .tuning import HAWKES_SPACE, MIM_SPACE, tune

log = logging.getLogger(__name__)

N_FOLDS = 3


@dataclass(frozen=True)
class TunerConfig:
    budget: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ConfigError("tuner budget must be at least 1")


@dataclass(frozen=True)
class Release:
    semester: int
    train_semesters: tuple[int, ...]
    event_cutoff: int  # T[s-1]
    test_time: int  # T[s]


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    folds: tuple[tuple[str, ...], ...]
    releases: tuple[Release, ...]


def make_fold_plan(dataset: Dataset, seed: int, n_folds: int = N_FOLDS) -> FoldPlan:
    egos = list(dataset.egos)
    if len(egos) < n_folds:
        raise ConfigError(f"need at least {n_folds} egos to make {n_folds} folds, got {len(egos)}")
    perm = np.random.default_rng(seed).permutation(len(egos))
    folds = tuple(tuple(sorted(egos[i] for i in part)) for part in np.array_split(perm, n_folds))
    sems = dataset.semesters
    releases = tuple(
        Release(s, tuple(sems[:k]), dataset.wave_time(sems[k - 1]), dataset.wave_time(s))
        for k, s in enumerate(sems)
        if k >= 1
    )
    return FoldPlan(seed, folds, releases)


@dataclass(frozen=True)
class EvalRecord:
    fold: str
    semester: int
    ego: str
    model: str
    rbo: float
    truth_len: int


@dataclass
class LeakageSentinel:
    """Audits the training data handed to the tuner for one release."""

    label: str
    test_egos: frozenset
    event_cutoff: Optional[int] = None
    test_time: Optional[int] = None
    accesses: int = 0
    violations: list = field(default_factory=list)

    def survey(self, s: SurveyResponse):
        self.accesses += 1
        if s.ego in self.test_egos:
            self.violations.append(f"{self.label}: training read test-fold survey of {s.ego}")
        if self.test_time is not None and s.survey_time >= self.test_time:
            self.violations.append(
                f"{self.label}: training read survey of {s.ego} at {s.survey_time} (test time {self.test_time})"
            )

    def events(self, ego: str, before: int, newest: int):
        self.accesses += 1
        if ego in self.test_egos:
            self.violations.append(f"{self.label}: training read events of test-fold ego {ego}")
        if self.event_cutoff is not None and (before > self.event_cutoff or newest >= self.event_cutoff):
            self.violations.append(
                f"{self.label}: training read events of {ego} up to {max(before, newest)} (cutoff {self.event_cutoff})"
            )

    def check(self):
        if self.violations:
            raise ProtocolViolation("; ".join(self.violations[:5]))


@dataclass
class EvalReport:
    kind: str  # "within" or "cross"
    label: str
    models: list[str]
    records: list[EvalRecord]
    rbo_config: RboConfig = RboConfig()
    trials: list[dict] = field(default_factory=list)
    fitted: list[dict] = field(default_factory=list)
    sentinel: dict = field(default_factory=lambda: {"accesses": 0, "violations": 0})

    def _rows(self, model: str) -> list[EvalRecord]:
        return [r for r in self.records if r.model == model]

    def group_scores(self, model: str) -> dict[str, float]:
        groups: dict[str, list[tuple[float, int]]] = {}
        for r in self._rows(model):
            groups.setdefault(r.fold, []).append((r.rbo, r.truth_len))
        return {g: weighted_mean_rbo(v) for g, v in sorted(groups.items())}

    def final_score(self, model: str) -> float:
        scores = list(self.group_scores(model).values())
        return float(sum(scores) / len(scores))

    def survey_variance(self, model: str) -> float:
        return float(np.var([r.rbo for r in self._rows(model) if r.truth_len > 0]))

    def group_variance(self, model: str) -> float:
        return float(np.var(list(self.group_scores(model).values())))

    def semester_scores(self, model: str) -> dict[int, float]:
        sem: dict[int, list[tuple[float, int]]] = {}
        for r in self._rows(model):
            sem.setdefault(r.semester, []).append((r.rbo, r.truth_len))
        return {s: weighted_mean_rbo(v) for s, v in sorted(sem.items()) if any(n for _, n in v)}

    def summary(self) -> dict:
        rows = []
        for m in self.models:
            rows.append(
                {
                    "model": m,
                    "score": self.final_score(m),
                    "survey_variance": self.survey_variance(m),
                    "group_variance": self.group_variance(m),
                    "groups": self.group_scores(m),
                    "semesters": {str(k): v for k, v in self.semester_scores(m).items()},
                    "n_surveys": sum(1 for r in self._rows(m) if r.truth_len > 0),
                }
            )
        rows.sort(key=lambda r: r["score"])
        return {
            "kind": self.kind,
            "label": self.label,
            "rbo": asdict(self.rbo_config),
            "models": rows,
            "sentinel": dict(self.sentinel),
            "fitted": self.fitted,
        }


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _space(model: ModelSpec):
    return MIM_SPACE if model.kind == "mim" else HAWKES_SPACE


def _fit(model: ModelSpec, snap, truths, tuner: TunerConfig, seed: int):
    lengths = [len(t) for t in truths]
    if not any(lengths):
        raise ConfigError("training set has no non-empty ground-truth lists")

    def objective(params):
        candidate = model.with_params(params)
        candidate.validate()
        ranked = candidate.rank_snapshot(snap)
        return weighted_mean_rbo((rbo(p, t), n) for p, t, n in zip(ranked, truths, lengths))

    return tune(objective, _space(model), tuner.budget, seed)


def _score(models, snap, truths, cfg: RboConfig, label: str, semesters, fitted_models) -> list[EvalRecord]:
    out = []
    for model, fitted in zip(models, fitted_models):
        for q, ranked in enumerate(fitted.rank_snapshot(snap)):
            truth = truths[q]
            out.append(EvalRecord(label, semesters[q], snap.egos[q], model.name, rbo(ranked, truth, cfg), len(truth)))
    return out


def _test_queries(dataset: Dataset, egos, semester: int):
    surveys = [s for e in egos for s in dataset.surveys_by_ego.get(e, ()) if s.semester_index == semester]
    return surveys, [(s.ego, s.survey_time, s.survey_time) for s in surveys]


def _run_release(dataset, gt, plan, fold_idx, release, models, tuner, cfg):
    test_egos = frozenset(plan.folds[fold_idx])
    train_egos = [e for i, f in enumerate(plan.folds) if i != fold_idx for e in f]
    label = str(fold_idx + 1)
    sentinel = LeakageSentinel(f"fold {label} semester {release.semester}", test_egos,
                               release.event_cutoff, release.test_time)

    train_surveys = [
        s for e in train_egos for s in dataset.surveys_by_ego.get(e, ()) if s.semester_index < release.semester
    ]
    for s in train_surveys:
        sentinel.survey(s)
    queries = [(s.ego, s.survey_time, min(s.survey_time, release.event_cutoff)) for s in train_surveys]
    train_snap = build_snapshot(dataset, queries, on_access=sentinel.events)
    sentinel.check()
    train_truth = [list(gt[(s.ego, s.survey_time)].ranked_alters) for s in train_surveys]

    fitted_models, trials, fitted = [], [], []
    for mi, model in enumerate(models):
        if getattr(model, "tunable", False):
            seed = _derive_seed(tuner.seed, fold_idx, release.semester, mi)
            best, log_ = _fit(model, train_snap, train_truth, tuner, seed)
            model = model.with_params(best)
            trials += [
                {"fold": label, "semester": release.semester, "model": model.name, **asdict(t)} for t in log_
            ]
            fitted.append({"fold": label, "semester": release.semester, "model": model.name, "params": best})
        fitted_models.append(model)

    test_surveys, test_queries = _test_queries(dataset, sorted(test_egos), release.semester)
    test_snap = build_snapshot(dataset, test_queries)
    test_truth = [list(gt[(s.ego, s.survey_time)].ranked_alters) for s in test_surveys]
    records = _score(models, test_snap, test_truth, cfg, label, [s.semester_index for s in test_surveys],
                     fitted_models)
    return records, trials, fitted, sentinel.accesses


_WORKER: dict = {}


def _worker_task(fold_idx, release):
    w = _WORKER
    return _run_release(w["dataset"], w["gt"], w["plan"], fold_idx, release, w["models"], w["tuner"], w["cfg"])


def _map_tasks(tasks, state, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        _WORKER.update(state)
        try:
            return [_worker_task(*t) for t in tasks]
        finally:
            _WORKER.clear()
    _WORKER.update(state)  # inherited by forked workers
    try:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            futures = [pool.submit(_worker_task, *t) for t in tasks]
            return [f.result() for f in futures]
    finally:
        _WORKER.clear()


def run_protocol(
    dataset: Dataset,
    plan: FoldPlan,
    models: Sequence[ModelSpec],
    tuner: TunerConfig = TunerConfig(),
    rbo_config: RboConfig = RboConfig(),
    jobs: int = 1,
    ground_truth: Optional[dict[tuple[str, int], GroundTruthRanking]] = None,
) -> EvalReport:
    if not plan.releases:
        raise ConfigError("need at least two survey semesters to evaluate")
    gt = ground_truth if ground_truth is not None else build_ground_truth(dataset)
    tasks = [(f, r) for f in range(len(plan.folds)) for r in plan.releases]
    state = dict(dataset=dataset, gt=gt, plan=plan, models=list(models), tuner=tuner, cfg=rbo_config)
    results = _map_tasks(tasks, state, jobs)

    records, trials, fitted, accesses = [], [], [], 0
    for recs, tr, fi, acc in results:
        records += recs
        trials += tr
        fitted += fi
        accesses += acc
    order = {m.name: i for i, m in enumerate(models)}
    records.sort(key=lambda r: (int(r.fold), r.semester, r.ego, order[r.model]))
    return EvalReport("within", dataset.name, [m.name for m in models], records, rbo_config, trials, fitted,
                      {"accesses": accesses, "violations": 0})


def make_cross_subgroups(
    large: Dataset,
    target_ego_count: int,
    semester_halves: tuple[Sequence[int], Sequence[int]],
    seed: int,
) -> list[Dataset]:
    """Equal-size ego subgroups crossed with two semester ranges (6 views)."""
    egos = list(large.egos)
    if target_ego_count < 1 or len(egos) < 3 * target_ego_count:
        raise ConfigError(f"{len(egos)} egos cannot make three groups of {target_ego_count}")
    perm = np.random.default_rng(seed).permutation(len(egos))
    kept = perm[len(egos) - 3 * target_ego_count:]
    groups = [sorted(egos[i] for i in part) for part in np.array_split(kept, 3)]

    out = []
    for h, half in enumerate(semester_halves):
        half = sorted(half)
        missing = [s for s in half if s not in large.semesters]
        if missing:
            raise ConfigError(f"semesters {missing} not present in {large.name!r}")
        prior = [s for s in large.semesters if s < half[0]]
        lo = max(s.survey_time for s in large.surveys if s.semester_index == prior[-1]) if prior else None
        hi = max(s.survey_time for s in large.surveys if s.semester_index == half[-1]) + 1
        for g, group in enumerate(groups):
            out.append(
                large.restrict(group, half, name=f"{large.name}/g{g + 1}h{h + 1}", renumber=True,
                               event_window=(lo, hi))
            )
    return out


def _fit_on(dataset: Dataset, models, tuner: TunerConfig, gt, tag: int):
    """Fit tunable models once on every survey of ``dataset`` (no staggering)."""
    surveys = list(dataset.surveys)
    queries = [(s.ego, s.survey_time, s.survey_time) for s in surveys]
    snap = build_snapshot(dataset, queries)
    truths = [list(gt[(s.ego, s.survey_time)].ranked_alters) for s in surveys]
    fitted_models, trials, fitted = [], [], []
    for mi, model in enumerate(models):
        if getattr(model, "tunable", False):
            best, log_ = _fit(model, snap, truths, tuner, _derive_seed(tuner.seed, tag, mi))
            model = model.with_params(best)
            trials += [{"fold": dataset.name, "model": model.name, **asdict(t)} for t in log_]
            fitted.append({"fold": dataset.name, "model": model.name, "params": best})
        fitted_models.append(model)
    return fitted_models, trials, fitted


def run_cross_eval(
    train: Union[Dataset, Sequence[Dataset]],
    test: Union[Dataset, Sequence[Dataset]],
    models: Sequence[ModelSpec],
    tuner: TunerConfig = TunerConfig(),
    rbo_config: RboConfig = RboConfig(),
) -> EvalReport:
    """Fit on each training set, score on each test set from semester 2 on.

    Every (train, test) pair is one subgroup; the final score is the mean of
    the subgroup scores.
    """
    trains = [train] if isinstance(train, Dataset) else list(train)
    tests = [test] if isinstance(test, Dataset) else list(test)
    for a in trains:
        for b in tests:
            shared = set(a.egos) & set(b.egos)
            if shared:
                raise ProtocolViolation(
                    f"train {a.name!r} and test {b.name!r} share {len(shared)} egos (e.g. {sorted(shared)[0]})"
                )

    test_parts = []
    for b in tests:
        gt_b = build_ground_truth(b)
        surveys = [s for s in b.surveys if s.semester_index >= 2]
        snap = build_snapshot(b, [(s.ego, s.survey_time, s.survey_time) for s in surveys])
        test_parts.append((b, snap, [list(gt_b[(s.ego, s.survey_time)].ranked_alters) for s in surveys],
                           [s.semester_index for s in surveys]))

    records, trials, fitted = [], [], []
    for i, a in enumerate(trains):
        fitted_models, tr, fi = _fit_on(a, models, tuner, build_ground_truth(a), i)
        trials += tr
        fitted += fi
        for b, snap, truths, sems in test_parts:
            records += _score(models, snap, truths, rbo_config, f"{a.name}->{b.name}", sems, fitted_models)

    label = f"{'+'.join(sorted({a.name.split('/')[0] for a in trains}))} -> " \
            f"{'+'.join(sorted({b.name.split('/')[0] for b in tests}))}"
    return EvalReport("cross", label, [m.name for m in models], records, rbo_config, trials, fitted)

import pytest

from memimprint.batch import build_snapshot, rank_snapshot, score_snapshot
from memimprint.models import ModelSpec, rank_candidates
from memimprint.synthdata import SynthConfig, generate

SPECS = [
    ModelSpec("mim", dict(L=300.0, mu=0.2, theta=0.05)),
    ModelSpec("mim", dict(L=50.0, mu=1.0, theta=0.0)),
    ModelSpec("mim", dict(L=500.0, mu=0.3, theta=0.0), s_base=0.1),
    ModelSpec("hawkes", dict(beta=0.01)),
    ModelSpec("frequency"),
    ModelSpec("recency"),
    ModelSpec("random", seed=4),
]


@pytest.fixture(scope="module")
def small():
    ds, _ = generate(SynthConfig(egos=6, semesters=3, peripheral_contacts=30, seed=11))
    return ds


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.params}-{s.s_base}")
def test_batch_matches_reference(small, spec):
    queries = [(s.ego, s.survey_time, s.survey_time) for s in small.surveys]
    snap = build_snapshot(small, queries)
    batch = rank_snapshot(spec, snap)
    scores = score_snapshot(spec, snap)
    for q, (ego, t, _) in enumerate(queries):
        ref = rank_candidates(small, ego, t, spec)
        assert batch[q] == ref.alters
        lo, hi = snap.offsets[q], snap.offsets[q + 1]
        by_alter = dict(zip(snap.alters[lo:hi], scores[lo:hi]))
        for alter, score in ref.entries:
            assert by_alter[alter] == pytest.approx(score, rel=1e-9)


def test_cutoff_hides_later_events(small):
    s = small.surveys[-1]
    early = s.survey_time - 30 * 86400
    snap = build_snapshot(small, [(s.ego, s.survey_time, early)])
    assert snap.last.max() < early
    assert (snap.ev_age >= 30 * 24).all()


def test_access_hook_reports_newest(small):
    seen = []
    s = small.surveys[0]
    build_snapshot(small, [(s.ego, s.survey_time, s.survey_time)], on_access=lambda *a: seen.append(a))
    ego, before, newest = seen[0]
    assert ego == s.ego and newest < before == s.survey_time


def test_empty_snapshot():
    from memimprint.domain import Dataset

    ds = Dataset.build("e", [], [], [])
    snap = build_snapshot(ds, [])
    assert rank_snapshot(ModelSpec("hawkes", dict(beta=1.0)), snap) == []

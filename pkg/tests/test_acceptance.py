"""Acceptance criteria, one pass/fail line each (see the summary at the end of a pytest run)."""

import random
import time
from dataclasses import replace

import numpy as np
import pytest
import yaml

from memimprint import io
from memimprint.cli import main
from memimprint.domain import HOUR, Dataset
from memimprint.evaluation import TunerConfig, make_cross_subgroups, make_fold_plan, run_cross_eval, run_protocol
from memimprint.groundtruth import tournament_rank
from memimprint.metrics import RboConfig, rbo
from memimprint.models import (HawkesParams, MimParams, MimState, ModelSpec, hawkes_intensity, mim_process_event,
                               mim_recall, mim_score)
from memimprint.synthdata import SynthConfig, generate, twin_configs
from memimprint.tuning import ParamRange, tune
from oracles import hawkes_direct, rbo_reference, tournament_reference

pytestmark = pytest.mark.slow

DEFAULT_MODELS = [ModelSpec("random"), ModelSpec("recency"), ModelSpec("frequency"),
                  ModelSpec("mim", tunable=True), ModelSpec("hawkes", tunable=True)]


@pytest.fixture(scope="module")
def benchmark():
    t0 = time.perf_counter()
    ds, _ = generate(SynthConfig())
    report = run_protocol(ds, make_fold_plan(ds, seed=0), DEFAULT_MODELS, TunerConfig(budget=100, seed=0))
    return ds, report, time.perf_counter() - t0


def test_c1_rbo_oracle(acceptance_line):
    rng = random.Random(1)
    pairs = []
    for _ in range(1000):
        alphabet = [f"v{i}" for i in range(rng.randint(1, 12))]
        pairs.append(tuple(rng.sample(alphabet, rng.randint(0, min(8, len(alphabet)))) for _ in range(2)))
    t0 = time.perf_counter()
    got = {v: [rbo(a, b, RboConfig(0.98, v)) for a, b in pairs] for v in ("extrapolated", "truncated")}
    elapsed = time.perf_counter() - t0
    err = max(abs(g - rbo_reference(a, b, 0.98, v == "extrapolated"))
              for v, vals in got.items() for g, (a, b) in zip(vals, pairs))
    ok = err <= 1e-12 and elapsed < 5
    acceptance_line("1 RBO oracle equivalence", ok, f"max|err|={err:.2e} time={elapsed:.2f}s")
    assert ok


def test_c2_hawkes_equivalence(acceptance_line):
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(1, 10_001)) if k else 10_000
        beta = float(10 ** rng.uniform(-4, 0))
        times = np.sort(rng.integers(0, 10_000_000, n))
        t = int(times[-1]) + int(rng.integers(1, 200_000))
        got = hawkes_intensity(times.tolist(), t, HawkesParams(beta))
        ref = hawkes_direct([x / HOUR for x in times.tolist()], t / HOUR, beta)
        worst = max(worst, abs(got - ref) / ref)
    worked = hawkes_intensity([0, HOUR], 2 * HOUR, HawkesParams(0.5))
    ok = worst <= 1e-9 and round(worked, 6) == 0.487205
    acceptance_line("2 Hawkes equivalence", ok, f"max rel err={worst:.2e} worked={worked:.6f}")
    assert ok


def test_c3_mim_analytic(acceptance_line):
    rng = np.random.default_rng(3)
    halving = 0.0
    for _ in range(100):
        p = MimParams(L=float(rng.integers(1, 5000)), mu=float(rng.uniform(0.01, 1)))
        state = MimState(float(rng.uniform(0.01, 1)), 1_000_000)
        after = mim_recall(state, 1_000_000 + int(p.L * HOUR), p)
        halving = max(halving, abs(after / (state.w_last / 2) - 1))
    first = max(abs(mim_process_event(MimState(), 0, MimParams(10.0, mu)).w_last - mu) / mu
                for mu in rng.uniform(0.01, 1, 100))
    bound_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        p = MimParams(L=float(10 ** rng.uniform(0, 4)), mu=float(rng.uniform(0.01, 1)))
        times = np.sort(rng.choice(10_000_000, n, replace=False)).tolist()
        w = mim_score(times, times[-1] + 1, p)
        bound_ok &= w <= 1 - (1 - p.mu) ** n + 1e-15
    ok = halving <= 1e-12 and first <= 1e-12 and bound_ok
    acceptance_line("3 MIM analytic checks", ok,
                    f"halving rel err={halving:.1e} first-event err={first:.1e} bound holds={bound_ok}")
    assert ok


def test_c4_tournament_oracle(acceptance_line):
    ds, _ = generate(SynthConfig(egos=50, seed=4, rate_scale=0, peripheral_rate=0, transient_rate=0))
    qs = [(q.id, q.direction == "higher_is_closer") for q in ds.questions]
    mismatches = 0
    for s in ds.surveys[:200]:
        order, points = tournament_reference(
            [(a.alter, dict(a.graded_answers), a.duration) for a in s.alters], qs)
        g = tournament_rank(s, ds.questions)
        mismatches += list(g.ranked_alters) != order or dict(g.points) != points
    clean, latent = generate(SynthConfig(egos=50, seed=4, churn=0, answer_noise=0, duration_noise=0,
                                         rate_scale=0, peripheral_rate=0, transient_rate=0))
    latent_off = 0
    for s in clean.surveys:
        g = tournament_rank(s, clean.questions)
        expected = sorted(g.ranked_alters, key=lambda a: -latent[(s.ego, a, s.semester_index)])
        latent_off += list(g.ranked_alters) != expected
    ok = mismatches == 0 and latent_off == 0
    acceptance_line("4 tournament oracle", ok,
                    f"{mismatches}/200 oracle mismatches, {latent_off}/{len(clean.surveys)} latent mismatches")
    assert ok


def test_c5_table1_ordering(benchmark, acceptance_line):
    _, report, elapsed = benchmark
    s = {m: report.final_score(m) for m in report.models}
    ok = (s["Random"] < s["Recency"] <= s["Frequency"] < max(s["MIM"], s["Hawkes"])
          and s["Random"] < 0.1 and abs(s["MIM"] - s["Hawkes"]) <= 0.05 and elapsed < 600)
    detail = " ".join(f"{m}={v:.4f}" for m, v in s.items()) + f" time={elapsed:.0f}s"
    acceptance_line("5 within-dataset ordering on the default benchmark", ok, detail)
    assert ok


def test_c6_table2_cross(acceptance_line):
    a_cfg, b_cfg = twin_configs(SynthConfig(), 1, 2)
    a, b = generate(a_cfg)[0], generate(b_cfg)[0]
    models = [ModelSpec("mim", tunable=True), ModelSpec("hawkes", tunable=True)]
    tuner = TunerConfig(budget=100, seed=0)
    within = run_protocol(b, make_fold_plan(b, seed=0), models, tuner)
    cross = run_cross_eval(a, b, models, tuner)
    rel = {m: abs(cross.final_score(m) - within.final_score(m)) / within.final_score(m) for m in within.models}

    big = generate(SynthConfig(egos=594, ties_min=2, ties_max=3, rate_scale=0, peripheral_rate=0,
                               transient_rate=0))[0]
    groups = make_cross_subgroups(big, 196, ((1, 2), (3, 4)), seed=0)
    sub_ok = len(groups) == 6 and all(len(g.egos) == 196 for g in groups)
    ok = all(v <= 0.10 for v in rel.values()) and sub_ok
    detail = " ".join(f"{m}: within={within.final_score(m):.4f} cross={cross.final_score(m):.4f} "
                      f"rel={rel[m]:.3f}" for m in within.models)
    acceptance_line("6 cross-dataset within 10% + 6 subgroups", ok, f"{detail} subgroups={len(groups)}")
    assert ok


def test_c7_protocol_integrity(benchmark, tmp_path, acceptance_line, capsys):
    _, report, _ = benchmark
    clean = report.sentinel["violations"] == 0 and report.sentinel["accesses"] > 0

    ds = generate(SynthConfig(egos=12, semesters=3, seed=7))[0]
    t2, ego = ds.wave_time(2), ds.egos[0]
    moved = []
    for s in ds.surveys:
        if s.ego == ego and s.semester_index in (1, 2):
            s = replace(s, survey_time=t2 if s.semester_index == 1 else t2 + 3600)
        moved.append(s)
    io.save_dataset(Dataset.build(ds.name, ds.events, moved, ds.questions), tmp_path / "bad")
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump({"dataset": str(tmp_path / "bad"), "tuner": {"budget": 4},
                                   "models": [{"kind": "hawkes", "tune": True}],
                                   "output_dir": str(tmp_path / "out")}))
    code = main(["evaluate", str(cfg)])
    ok = clean and code == 4
    acceptance_line("7 leakage sentinel", ok,
                    f"{report.sentinel['accesses']} audited accesses, {report.sentinel['violations']} violations; "
                    f"injected violation exit code {code}")
    assert ok


def test_c8_determinism(tmp_path, acceptance_line, capsys):
    cfg = {"dataset": {"synth": {"egos": 30, "semesters": 3, "seed": 8}}, "tuner": {"budget": 12, "seed": 3},
           "models": ["random", "recency", "frequency", {"kind": "mim", "tune": True},
                      {"kind": "hawkes", "tune": True}]}
    outputs = []
    for tag, jobs in (("j1a", 1), ("j1b", 1), ("j8", 8)):
        path = tmp_path / f"{tag}.yaml"
        path.write_text(yaml.safe_dump({**cfg, "output_dir": str(tmp_path / tag)}))
        assert main(["evaluate", str(path), "--jobs", str(jobs)]) == 0
        outputs.append({f: (tmp_path / tag / f).read_bytes() for f in ("records.csv", "trials.jsonl", "summary.json")})
    same = outputs[0] == outputs[1] == outputs[2]
    n_trials = outputs[0]["trials.jsonl"].count(b"\n")
    acceptance_line("8 byte-identical reports (jobs 1, 1, 8)", same, f"{n_trials} trials compared")
    assert same


def test_c9_tuner(acceptance_line):
    space = [ParamRange("x", 0.0, 1.0)]

    def f(p):
        return 1 - (p["x"] - 0.3) ** 2

    best, _ = tune(f, space, 64, seed=0)
    curves = []
    for seed in range(20):
        curves.append([max(t.value for t in tune(f, space, b, seed)[1]) for b in (8, 16, 32, 64)])
    monotone = all(c == sorted(c) for c in curves)
    ok = abs(best["x"] - 0.3) <= 0.02 and monotone
    acceptance_line("9 tuner optimum + monotone budget", ok,
                    f"x*={best['x']:.4f} monotone over 20 seeds={monotone}")
    assert ok

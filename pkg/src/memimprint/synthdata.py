"""Synthetic populations with planted tie strengths.

Each ego gets 10-40 ties with log-normal latent strengths that may resample
between semesters (churn). A tie's communication is a self-exciting process
whose baseline rate is proportional to its current strength, simulated by
Ogata thinning. Surveys list the strongest ties, answer each question with a
quantile bin of (noisy) strength and report duration as tie age plus noise.
Peripheral contacts add sparse Poisson traffic with people never listed, and
transient contacts add short bursts of heavy traffic (a project partner, a
one-off event) that are never listed either.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from statistics import NormalDist

import numpy as np

from .domain import HOUR, MAX_ALTERS, AlterAnswer, Channel, Dataset, Event, Question, SurveyResponse
from .errors import ConfigError

DAY = 24 * HOUR
YEAR_HOURS = 365.25 * 24

DEFAULT_QUESTIONS = (
    ("closeness", ("Distant", "Less than close", "Close", "Especially close"), (0.25, 0.5, 0.75)),
    ("similarity", ("Very different", "Different", "Neutral", "Similar", "Very similar"), (0.2, 0.4, 0.6, 0.8)),
    ("emotional", ("None", "Some", "Significant", "Great"), (0.3, 0.6, 0.85)),
)


@dataclass(frozen=True)
class SynthConfig:
    name: str = "synth"
    id_prefix: str = "S"
    egos: int = 196
    semesters: int = 4
    semester_days: float = 120.0
    start: int = 1313971200  # 2011-08-22 UTC
    ties_min: int = 10
    ties_max: int = 40
    strength_log_mean: float = 0.0
    strength_log_sd: float = 1.0
    rate_scale: float = 0.002  # baseline events/hour per unit strength
    burstiness: float = 0.5  # branching ratio of the self-excitation
    burst_decay_hours: float = 2.0
    churn: float = 0.5
    answer_noise: float = 0.3  # log-scale sd applied per question
    duration_scale_years: float = 8.0
    duration_noise: float = 1.0
    offline_fraction: float = 0.1
    peripheral_contacts: int = 250
    peripheral_rate: float = 0.0004  # events/hour
    transient_contacts: int = 3  # per ego and semester
    transient_rate: float = 0.05  # events/hour while active
    transient_days: float = 14.0
    call_fraction: float = 0.2
    questions: tuple = DEFAULT_QUESTIONS
    include_duration_question: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.egos < 1 or self.semesters < 1:
            raise ConfigError("need at least one ego and one semester")
        if not 1 <= self.ties_min <= self.ties_max:
            raise ConfigError("tie counts must satisfy 1 <= ties_min <= ties_max")
        if self.rate_scale < 0 or self.peripheral_rate < 0:
            raise ConfigError("event rates must be non-negative")
        if not 0 <= self.burstiness < 1:
            raise ConfigError("burstiness must lie in [0, 1) for a stable process")
        if self.transient_contacts < 0 or self.transient_rate < 0 or self.transient_days < 0:
            raise ConfigError("transient contact settings must be non-negative")
        if self.burst_decay_hours <= 0 or self.semester_days <= 0 or self.strength_log_sd <= 0:
            raise ConfigError("time scales and strength spread must be positive")
        for p in ("churn", "offline_fraction", "call_fraction"):
            if not 0 <= getattr(self, p) <= 1:
                raise ConfigError(f"{p} must lie in [0, 1]")
        for qid, levels, cuts in self.questions:
            if len(cuts) != len(levels) - 1 or list(cuts) != sorted(cuts) or not all(0 < c < 1 for c in cuts):
                raise ConfigError(f"question {qid!r}: quantile cut points must be increasing inside (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "questions" in d:
            d["questions"] = tuple((q[0], tuple(q[1]), tuple(q[2])) for q in d["questions"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth options: {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def survey_time(self, semester: int) -> int:
        return int(self.start + semester * self.semester_days * DAY)


def question_schema(config: SynthConfig) -> tuple[Question, ...]:
    qs = [Question(qid, "ordinal", levels) for qid, levels, _ in config.questions]
    if config.include_duration_question:
        qs.append(Question("duration", "rational"))
    return tuple(qs)


def _simulate_dyad(rng, baselines, bounds, alpha, decay):
    """Thinning for a Hawkes process with piecewise-constant baseline.

    ``baselines[i]`` holds on ``[bounds[i], bounds[i+1])``; times in hours.
    """
    out = []
    t = bounds[0]
    excite = 0.0  # excitation intensity at time t
    for i, mu in enumerate(baselines):
        end = bounds[i + 1]
        while True:
            upper = mu + excite
            if upper <= 0:
                break
            step = rng.exponential(1.0 / upper)
            if t + step >= end:
                excite *= math.exp(-decay * (end - t))
                t = end
                break
            t += step
            excite *= math.exp(-decay * step)
            if rng.random() * upper <= mu + excite:
                out.append(t)
                excite += alpha * decay
    return out


def generate(config: SynthConfig) -> tuple[Dataset, dict[tuple[str, str, int], float]]:
    rng = np.random.default_rng(config.seed)
    S = config.semesters
    nd = NormalDist(config.strength_log_mean, config.strength_log_sd)
    cutpoints = [[math.exp(nd.inv_cdf(c)) for c in cuts] for _, _, cuts in config.questions]
    bounds_h = [s * config.semester_days * 24 for s in range(S + 1)]
    decay = 1.0 / config.burst_decay_hours

    events: list[Event] = []
    surveys: list[SurveyResponse] = []
    latent: dict[tuple[str, str, int], float] = {}

    def emit(times_h, ego, other):
        for th in times_h:
            ts = config.start + int(th * HOUR)
            if rng.random() < 0.5:
                a, b = ego, other
            else:
                a, b = other, ego
            if rng.random() < config.call_fraction:
                events.append(Event(ts, a, b, Channel.CALL, int(rng.exponential(180))))
            else:
                events.append(Event(ts, a, b, Channel.TEXT, int(rng.integers(1, 160))))

    width = len(str(config.egos))
    for e in range(config.egos):
        ego = f"{config.id_prefix}{e:0{width}d}"
        n_ties = int(rng.integers(config.ties_min, config.ties_max + 1))
        alters = [f"{ego}.t{j:02d}" for j in range(n_ties)]
        strength = np.empty((n_ties, S))
        strength[:, 0] = rng.lognormal(config.strength_log_mean, config.strength_log_sd, n_ties)
        for s in range(1, S):
            redraw = rng.random(n_ties) < config.churn
            fresh = rng.lognormal(config.strength_log_mean, config.strength_log_sd, n_ties)
            strength[:, s] = np.where(redraw, fresh, strength[:, s - 1])
        offline = rng.random(n_ties) < config.offline_fraction
        cdf0 = np.array([nd.cdf(math.log(x)) for x in strength[:, 0]])
        age0 = np.maximum(
            0.0, config.duration_scale_years * cdf0 + rng.normal(0.0, config.duration_noise, n_ties)
        ) if config.duration_noise > 0 else config.duration_scale_years * cdf0

        for j, alter in enumerate(alters):
            for s in range(S):
                latent[(ego, alter, s + 1)] = float(strength[j, s])
            if offline[j] or config.rate_scale == 0:
                continue
            times = _simulate_dyad(rng, config.rate_scale * strength[j], bounds_h, config.burstiness, decay)
            emit(times, ego, alter)

        for j in range(config.peripheral_contacts):
            n = rng.poisson(config.peripheral_rate * bounds_h[-1])
            if n:
                emit(np.sort(rng.uniform(0.0, bounds_h[-1], n)), ego, f"{ego}.p{j:03d}")

        span = config.transient_days * 24
        for s in range(S):
            for j in range(config.transient_contacts):
                n = rng.poisson(config.transient_rate * span)
                if n:
                    lo = rng.uniform(bounds_h[s], max(bounds_h[s], bounds_h[s + 1] - span))
                    emit(np.sort(rng.uniform(lo, lo + span, n)), ego, f"{ego}.x{s + 1}{j:02d}")

        for s in range(S):
            t_s = config.survey_time(s + 1)
            k = min(MAX_ALTERS, n_ties)
            listed = np.argsort(-strength[:, s], kind="stable")[:k]
            years = (t_s - config.start) / HOUR / YEAR_HOURS
            answers = []
            for j in listed:
                graded = {}
                for (qid, _, _), cuts in zip(config.questions, cutpoints):
                    noisy = strength[j, s]
                    if config.answer_noise > 0:
                        noisy *= math.exp(rng.normal(0.0, config.answer_noise))
                    graded[qid] = int(np.searchsorted(cuts, noisy, side="right"))
                answers.append(AlterAnswer(alters[j], graded, round(float(age0[j]) + years, 4)))
            surveys.append(SurveyResponse(ego, t_s, s + 1, tuple(answers)))

    ds = Dataset.build(config.name, events, surveys, question_schema(config))
    return ds, latent


def twin_configs(config: SynthConfig, seed_a: int, seed_b: int) -> tuple[SynthConfig, SynthConfig]:
    """Two populations from one generator with disjoint participant ids."""
    from dataclasses import replace

    return (
        replace(config, name=f"{config.name}-A", id_prefix=f"{config.id_prefix}A", seed=seed_a),
        replace(config, name=f"{config.name}-B", id_prefix=f"{config.id_prefix}B", seed=seed_b),
    )

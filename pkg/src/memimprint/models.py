"""Alter ranking models: memory imprint (MIM), Hawkes intensity and baselines.

All models share one shape: score every candidate alter from the dyad's
event times before the evaluation time, then sort. These are the reference
per-dyad implementations; :mod:`memimprint.batch` evaluates the same scores
vectorised over many dyads for tuning.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union


from .domain import HOUR, MAX_ALTERS, Dataset, Event, RankedList, candidate_alters
from .errors import ConfigError, InvalidParams, OrderingError

LN2 = math.log(2.0)

MODEL_KINDS = ("random", "recency", "frequency", "mim", "hawkes")
DISPLAY_NAMES = {
    "random": "Random",
    "recency": "Recency",
    "frequency": "Frequency",
    "mim": "MIM",
    "hawkes": "Hawkes",
}

TimeLike = Union[Event, int, float]


def _seconds(x: TimeLike) -> float:
    return x.timestamp if isinstance(x, Event) else x


@dataclass(frozen=True)
class MimParams:
    L: float  # half-life, hours
    mu: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidParams(f"MIM half-life L must be positive, got {self.L}")
        if not 0 < self.mu <= 1:
            raise InvalidParams(f"MIM mu must lie in (0, 1], got {self.mu}")
        if not 0 <= self.theta < 1:
            raise InvalidParams(f"MIM theta must lie in [0, 1), got {self.theta}")
        if self.theta >= self.mu:
            raise InvalidParams(f"MIM theta ({self.theta}) must be below mu ({self.mu})")


@dataclass(frozen=True)
class HawkesParams:
    beta: float  # decay rate, 1/hours
    lambda0: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParams(f"Hawkes beta must be positive, got {self.beta}")
        if self.lambda0 != 0:
            raise InvalidParams("the immigrant rate lambda0 is fixed at 0")


@dataclass(frozen=True)
class MimState:
    w_last: float = 0.0
    t_last: Optional[int] = None
    s_base: float = 0.0


def mim_recall(state: MimState, t: int, params: MimParams) -> float:
    if state.t_last is None:
        return 0.0
    if t < state.t_last:
        raise OrderingError(f"recall at {t} precedes last event at {state.t_last}")
    hours = (t - state.t_last) / HOUR
    return state.w_last * math.exp(-hours * LN2 / params.L)


def mim_process_event(state: MimState, t_event: int, params: MimParams) -> MimState:
    r = mim_recall(state, t_event, params)
    s = state.s_base
    w = s + params.mu + (1 - params.mu) * r * (1 - s)
    return MimState(min(w, 1.0), t_event, s)


def mim_score(events: Sequence[TimeLike], t: int, params: MimParams, s_base: float = 0.0) -> float:
    if not events:
        return 0.0
    state = MimState(s_base=s_base)
    for e in events:
        ts = _seconds(e)
        if ts >= t:
            raise OrderingError(f"event at {ts} is not before evaluation time {t}")
        state = mim_process_event(state, ts, params)
    return s_base + mim_recall(state, t, params) * (1 - s_base)


def hawkes_intensity(events: Sequence[TimeLike], t: int, params: HawkesParams) -> float:
    """Exponential-kernel intensity via the O(n) recursion."""
    lam = 0.0
    prev = None
    for e in events:
        ts = _seconds(e)
        if ts >= t:
            continue
        if prev is not None:
            if ts < prev:
                raise OrderingError("events are not time-sorted")
            lam *= math.exp(-params.beta * (ts - prev) / HOUR)
        lam += params.beta
        prev = ts
    if prev is None:
        return params.lambda0
    return params.lambda0 + lam * math.exp(-params.beta * (t - prev) / HOUR)


def frequency_score(events: Sequence[TimeLike], t: int) -> float:
    if not events:
        return 0.0
    elapsed = (t - _seconds(events[0])) / HOUR
    return len(events) / max(elapsed, 1.0)


def recency_score(events: Sequence[TimeLike], t: int) -> float:
    if not events:
        return -math.inf
    return -(t - _seconds(events[-1])) / HOUR


def random_score(ego: str, alter: str, t: int, seed: int) -> float:
    key = f"{seed}|{ego}|{alter}|{t}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0**64


@dataclass(frozen=True)
class ModelSpec:
    """A model kind with its parameters.

    ``params`` holds ``L``, ``mu``, ``theta`` for MIM and ``beta`` for Hawkes;
    baselines take none. ``seed`` only matters for the random model.
    """

    kind: str
    params: dict = field(default_factory=dict, hash=False)
    tunable: bool = False
    seed: int = 0
    s_base: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.kind!r}; expected one of {', '.join(MODEL_KINDS)}")
        if self.tunable and self.kind not in ("mim", "hawkes"):
            raise ConfigError(f"model {self.kind!r} has no tunable parameters")
        if not 0 <= self.s_base < 1:
            raise ConfigError("s_base must lie in [0, 1)")

    @property
    def name(self) -> str:
        return DISPLAY_NAMES[self.kind]

    def with_params(self, params: dict) -> "ModelSpec":
        return replace(self, params=dict(params))

    @property
    def mim(self) -> MimParams:
        return MimParams(**self.params)

    @property
    def hawkes(self) -> HawkesParams:
        return HawkesParams(**self.params)

    def validate(self):
        if self.kind == "mim":
            self.mim
        elif self.kind == "hawkes":
            self.hawkes

    @property
    def threshold(self) -> Optional[float]:
        return self.params.get("theta", 0.0) if self.kind == "mim" else None

    def score(self, ego: str, alter: str, times: Sequence[TimeLike], t: int) -> float:
        if self.kind == "mim":
            return mim_score(times, t, self.mim, self.s_base)
        if self.kind == "hawkes":
            return hawkes_intensity(times, t, self.hawkes)
        if self.kind == "frequency":
            return frequency_score(times, t)
        if self.kind == "recency":
            return recency_score(times, t)
        return random_score(ego, alter, t, self.seed)

    def rank_snapshot(self, snap) -> list[list[str]]:
        from .batch import rank_snapshot

        return rank_snapshot(self, snap)


def order_candidates(
    scored: Iterable[tuple[str, float, int]], threshold: Optional[float] = None, limit: int = MAX_ALTERS
) -> list[tuple[str, float]]:
    """Sort (alter, score, first_contact) triples; apply threshold and top-k cut."""
    rows = sorted(scored, key=lambda r: (-r[1], r[2], r[0]))
    out = []
    for alter, score, _ in rows:
        if score == -math.inf:
            continue
        if threshold is not None and score <= threshold:
            continue
        out.append((alter, score))
        if len(out) == limit:
            break
    return out


def rank_candidates(dataset: Dataset, ego: str, t: int, model: ModelSpec) -> RankedList:
    model.validate()
    scored = []
    for alter in candidate_alters(dataset, ego, t):
        times = dataset.dyad_times(ego, alter, t).tolist()
        scored.append((alter, model.score(ego, alter, times, t), times[0]))
    entries = order_candidates(scored, model.threshold)
    return RankedList(ego, t, tuple(entries))

"""Deterministic black-box maximisation over a box of parameters.

Half the budget goes to a scrambled Halton sequence over the whole space;
the rest refines around the incumbent in a box whose half-width halves every
round. The refinement of a budget-``b`` search contains that of the
``ceil(b/2)`` search, so doubling the budget never lowers the best value.
Everything is driven by the seed, so a trial log can be replayed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import ConfigError, InvalidParams

log = logging.getLogger(__name__)

REFINE_ROUNDS = 6


@dataclass(frozen=True)
class ParamRange:
    name: str
    low: float
    high: float
    scale: str = "linear"

    def __post_init__(self):
        if not self.low < self.high:
            raise ConfigError(f"{self.name}: lower bound {self.low} must be below upper {self.high}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"{self.name}: unknown scale {self.scale!r}")
        if self.scale == "log" and self.low <= 0:
            raise ConfigError(f"{self.name}: log scale needs a positive lower bound")

    def from_unit(self, u: float) -> float:
        if self.scale == "log":
            lo, hi = math.log(self.low), math.log(self.high)
            return float(math.exp(lo + u * (hi - lo)))
        return float(self.low + u * (self.high - self.low))


SearchSpace = Sequence[ParamRange]

MIM_SPACE: tuple[ParamRange, ...] = (
    ParamRange("L", 1.0, 8760.0, "log"),
    ParamRange("mu", 0.01, 1.0),
    ParamRange("theta", 0.0, 0.99),
)
HAWKES_SPACE: tuple[ParamRange, ...] = (ParamRange("beta", 1e-4, 10.0, "log"),)


@dataclass(frozen=True)
class TrialRecord:
    index: int
    params: dict
    value: float
    seed: int
    stage: int
    valid: bool = True


def tune(
    objective: Callable[[dict], float],
    space: SearchSpace,
    budget: int,
    seed: int,
) -> tuple[dict, list[TrialRecord]]:
    """Maximise ``objective`` over ``space`` with ``budget`` evaluations.

    An objective raising :class:`InvalidParams` scores 0 for that trial and
    is never returned as the best.
    Returns the best parameters and the full trial log.
    """
    space = list(space)
    if not space:
        raise ConfigError("empty search space")
    if budget < 1:
        raise ConfigError("tuning budget must be at least 1")
    dim = len(space)
    trials: list[TrialRecord] = []

    def run(u: np.ndarray, stage: int) -> tuple[np.ndarray, float]:
        params = {r.name: r.from_unit(float(x)) for r, x in zip(space, u)}
        valid = True
        try:
            value = float(objective(params))
        except InvalidParams as exc:
            log.debug("trial %d invalid (%s); scored 0", len(trials), exc)
            value, valid = 0.0, False
        trials.append(TrialRecord(len(trials), params, value, seed, stage, valid))
        return u, value

    n_explore = math.ceil(budget / 2)
    halton = qmc.Halton(dim, scramble=True, seed=np.random.default_rng(_child_seed(seed, 0)))
    explored = [run(u, 1) for u in halton.random(n_explore)]

    def refine(b: int) -> list[tuple[np.ndarray, float]]:
        # stage 2 of a budget-b search: replay the stage 2 of the ceil(b/2)
        # search (so a larger budget never loses a point a smaller one tried),
        # then refine around the incumbent
        n1 = math.ceil(b / 2)
        if b - n1 == 0:
            return []
        done = refine(n1)
        pool = explored[:n1] + done
        new = b - n1 - len(done)
        rng = qmc.Halton(dim, scramble=True, seed=np.random.default_rng(_child_seed(seed, b)))
        per_round = max(2 * dim, math.ceil(new / REFINE_ROUNDS))
        half = n1 ** (-1.0 / dim)
        while new > 0:
            k = min(per_round, new)
            center = max(pool, key=lambda uv: uv[1])[0]
            for v in rng.random(k):
                pool.append(run(np.clip(center + (2 * v - 1) * half, 0.0, 1.0), 2))
            new -= k
            half /= 2
        return pool[n1:]

    refine(budget)
    valid = [tr for tr in trials if tr.valid]
    if not valid:
        raise ConfigError(f"no valid parameter set among {budget} trials; raise the tuning budget")
    best = max(valid, key=lambda tr: (tr.value, -tr.index))
    return dict(best.params), trials


def _child_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])

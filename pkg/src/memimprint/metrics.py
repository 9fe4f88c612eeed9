"""Rank-biased overlap (Webber, Moffat & Zobel 2010) and weighted averaging."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError

log = logging.getLogger(__name__)

DEFAULT_P = 0.98


@dataclass(frozen=True)
class RboConfig:
    p: float = DEFAULT_P
    variant: str = "extrapolated"

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ConfigError(f"RBO persistence p must lie in (0, 1), got {self.p}")
        if self.variant not in ("extrapolated", "truncated"):
            raise ConfigError(f"unknown RBO variant {self.variant!r}")


def rbo(predicted: Sequence, truth: Sequence, config: RboConfig = RboConfig()) -> float:
    """Rank-biased overlap of two rankings without duplicates.

    The extrapolated variant is Webber et al.'s RBO_ext for uneven lists: the
    overlap seen at the shorter list's depth is assumed to persist beyond it.
    The truncated variant is the plain
    prefix sum ``(1 - p) * sum_d p**(d-1) * A_d`` up to the longer depth.
    """
    if len(set(predicted)) != len(predicted) or len(set(truth)) != len(truth):
        raise ValueError("rbo: rankings must not contain duplicates")
    if not predicted and not truth:
        log.debug("rbo of two empty lists taken as 1")
        return 1.0
    if not predicted or not truth:
        return 0.0

    p = config.p
    short, long_ = (predicted, truth) if len(predicted) <= len(truth) else (truth, predicted)
    s, l = len(short), len(long_)

    seen_s: set = set()
    seen_l: set = set()
    overlap = 0
    x = [0] * (l + 1)  # x[d]: overlap of the two prefixes at depth d
    for d in range(1, l + 1):
        a = long_[d - 1]
        b = short[d - 1] if d <= s else None
        if a == b:
            overlap += 1
        else:
            if a in seen_s:
                overlap += 1
            if b is not None and b in seen_l:
                overlap += 1
            seen_l.add(a)
            if b is not None:
                seen_s.add(b)
        x[d] = overlap

    if config.variant == "truncated":
        return (1 - p) * sum(p ** (d - 1) * x[d] / d for d in range(1, l + 1))

    head = sum(x[d] / d * p**d for d in range(1, l + 1))
    tail = sum(x[s] * (d - s) / (s * d) * p**d for d in range(s + 1, l + 1))
    ext = ((x[l] - x[s]) / l + x[s] / s) * p**l
    value = (1 - p) / p * (head + tail) + ext
    return min(1.0, max(0.0, value))


def weighted_mean_rbo(scores: Iterable[tuple[float, int]]) -> float:
    """Average RBO weighted by ground-truth list length."""
    num = den = 0.0
    for value, length in scores:
        if length < 0:
            raise ValueError("negative truth length")
        num += value * length
        den += length
    if den == 0:
        raise ValueError("weighted mean undefined: every ground-truth list is empty")
    return num / den

"""Vectorised scoring of many (ego, time) ranking queries at once.

A :class:`Snapshot` flattens the candidate dyads of every query and their
event ages into numpy arrays, so one parameter setting is scored with a few
array operations. Tuning evaluates hundreds of settings against the same
snapshot.

The MIM recursion (decay, then ``w <- mu + (1 - mu) * r`` at each event)
unrolls to ``mu * sum_k (1 - mu)**(n - k) * 2**(-age_k / L)`` when the
baseline ``s`` is zero, which is what is computed here. Nonzero baselines
fall back to the per-dyad recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import HOUR, MAX_ALTERS, Dataset
from .models import LN2, ModelSpec, mim_score, random_score

AccessHook = Callable[[str, int, int], None]


@dataclass
class Snapshot:
    egos: list[str]
    times: list[int]
    offsets: np.ndarray  # query q owns dyads offsets[q]:offsets[q+1]
    alters: list[str]
    alter_rank: np.ndarray
    query_of: np.ndarray
    first: np.ndarray
    last: np.ndarray
    count: np.ndarray
    ev_dyad: np.ndarray
    ev_ts: np.ndarray
    ev_age: np.ndarray  # hours between event and query time
    ev_rev: np.ndarray  # later events in the same dyad

    def __len__(self):
        return len(self.egos)

    @property
    def n_dyads(self) -> int:
        return len(self.alters)


def build_snapshot(
    dataset: Dataset,
    queries: Sequence[tuple[str, int, int]],
    on_access: Optional[AccessHook] = None,
) -> Snapshot:
    """Queries are ``(ego, evaluation_time, events_before)`` triples."""
    ts_all = dataset.timestamps
    egos, times, offsets, alters, qof = [], [], [0], [], []
    first, last, count = [], [], []
    ev_dyad, ev_ts, ev_t = [], [], []
    for q, (ego, t, before) in enumerate(queries):
        before = min(before, t)
        newest = -1
        for other, pos in sorted(dataset.contacts(ego).items()):
            ts = ts_all[pos]
            n = int(np.searchsorted(ts, before, side="left"))
            if n == 0:
                continue
            d = len(alters)
            alters.append(other)
            qof.append(q)
            first.append(ts[0])
            last.append(ts[n - 1])
            count.append(n)
            ev_dyad.append(np.full(n, d, dtype=np.int64))
            ev_ts.append(ts[:n])
            ev_t.append(np.full(n, t, dtype=np.int64))
            newest = max(newest, int(ts[n - 1]))
        if on_access is not None:
            on_access(ego, before, newest)
        egos.append(ego)
        times.append(t)
        offsets.append(len(alters))

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype, copy=False) if parts else np.empty(0, dtype=dtype)

    ev_dyad_a = cat(ev_dyad, np.int64)
    ev_ts_a = cat(ev_ts, np.int64)
    ev_t_a = cat(ev_t, np.int64)
    count_a = np.asarray(count, dtype=np.int64)
    # events of a dyad are contiguous and time-sorted
    starts = np.zeros(len(count_a), dtype=np.int64)
    if len(count_a):
        starts[1:] = np.cumsum(count_a)[:-1]
    pos_in_dyad = np.arange(len(ev_dyad_a)) - starts[ev_dyad_a] if len(ev_dyad_a) else ev_dyad_a
    ev_rev = count_a[ev_dyad_a] - 1 - pos_in_dyad if len(ev_dyad_a) else ev_dyad_a

    uniq = sorted(set(alters))
    rank_of = {a: i for i, a in enumerate(uniq)}
    return Snapshot(
        egos=egos,
        times=times,
        offsets=np.asarray(offsets, dtype=np.int64),
        alters=alters,
        alter_rank=np.asarray([rank_of[a] for a in alters], dtype=np.int64),
        query_of=np.asarray(qof, dtype=np.int64),
        first=np.asarray(first, dtype=np.int64),
        last=np.asarray(last, dtype=np.int64),
        count=count_a,
        ev_dyad=ev_dyad_a,
        ev_ts=ev_ts_a,
        ev_age=(ev_t_a - ev_ts_a) / HOUR,
        ev_rev=ev_rev,
    )


def score_snapshot(model: ModelSpec, snap: Snapshot) -> np.ndarray:
    D = snap.n_dyads
    qtime = np.asarray(snap.times, dtype=np.int64)[snap.query_of] if D else np.empty(0, dtype=np.int64)
    if model.kind == "hawkes":
        beta = model.hawkes.beta
        return beta * np.bincount(snap.ev_dyad, np.exp(-beta * snap.ev_age), minlength=D)
    if model.kind == "mim":
        p = model.mim
        if model.s_base != 0:
            return _mim_fallback(model, snap, qtime)
        decay = -snap.ev_age * (LN2 / p.L)
        if p.mu == 1.0:
            w = np.where(snap.ev_rev == 0, np.exp(decay), 0.0)
        else:
            w = np.exp(snap.ev_rev * np.log1p(-p.mu) + decay)
        return p.mu * np.bincount(snap.ev_dyad, w, minlength=D)
    if model.kind == "frequency":
        elapsed = np.maximum((qtime - snap.first) / HOUR, 1.0)
        return snap.count / elapsed
    if model.kind == "recency":
        return -((qtime - snap.last) / HOUR)
    return np.array(
        [random_score(snap.egos[q], a, snap.times[q], model.seed) for q, a in zip(snap.query_of, snap.alters)],
        dtype=float,
    )


def _mim_fallback(model: ModelSpec, snap: Snapshot, qtime: np.ndarray) -> np.ndarray:
    out = np.zeros(snap.n_dyads)
    bounds = np.concatenate([[0], np.cumsum(snap.count)])
    for d in range(snap.n_dyads):
        times = snap.ev_ts[bounds[d] : bounds[d + 1]].tolist()
        out[d] = mim_score(times, int(qtime[d]), model.mim, model.s_base)
    return out


def rank_snapshot(model: ModelSpec, snap: Snapshot, limit: int = MAX_ALTERS) -> list[list[str]]:
    """Ranked alter lists, one per query, with the same ordering rules as
    :func:`memimprint.models.rank_candidates`."""
    scores = score_snapshot(model, snap)
    order = np.lexsort((snap.alter_rank, snap.first, -scores, snap.query_of))
    theta = model.threshold
    out = []
    for q in range(len(snap)):
        seg = order[snap.offsets[q] : snap.offsets[q + 1]]
        if theta is not None:
            seg = seg[scores[seg] > theta]
        out.append([snap.alters[i] for i in seg[:limit]])
    return out

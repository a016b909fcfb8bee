"""Recall aggregates, moving averages and windowed signed McNemar tests."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import EvaluationRecord

# chi-square, 1 degree of freedom
CHI2_CRITICAL = {0.05: 3.841, 0.01: 6.635, 0.001: 10.828}


@dataclass(frozen=True)
class SummaryRow:
    model: str
    recall: float
    mean_update_ms: float
    median_update_ms: float
    events_scored: int
    events_total: int
    status: str = "complete"


@dataclass(frozen=True)
class MovingAverageSeries:
    window: int
    seq: np.ndarray
    values: np.ndarray

    @property
    def warmup(self) -> int:
        return self.window

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class McNemarPoint:
    seq: int
    n01: int
    n10: int
    statistic: float
    significant: bool
    warmup: bool = False

    @property
    def degenerate(self) -> bool:
        return self.n01 + self.n10 == 0


def scored(records: Sequence[EvaluationRecord], known_users_only: bool = False):
    if known_users_only:
        return [r for r in records if r.user_known]
    return list(records)


def hits(records: Sequence[EvaluationRecord]) -> np.ndarray:
    return np.fromiter((r.hit for r in records), dtype=np.int64, count=len(records))


def overall_summary(
    runs: dict, known_users_only: bool = False
) -> list[SummaryRow]:
    """One row per model, in the order given.

    ``runs`` maps model name to either a record list or an object with
    ``records`` and ``status`` attributes. Update times average over every
    record, including the cold-start ones.
    """
    if not runs:
        raise ValueError("no runs to summarise")
    rows = []
    for name, run in runs.items():
        records = getattr(run, "records", run)
        status = getattr(run, "status", "complete")
        if not records:
            raise ValueError(f"model {name} has no evaluation records")
        sel = scored(records, known_users_only)
        recall = float(hits(sel).mean()) if sel else 0.0
        upd = np.array([r.update_us for r in records]) / 1000.0
        rows.append(
            SummaryRow(
                name, recall, float(upd.mean()), float(np.median(upd)),
                sum(r.user_known for r in records), len(records), status,
            )
        )
    return rows


def moving_average(scores: Sequence[int] | np.ndarray, n: int) -> np.ndarray:
    """Windowed mean of the last ``n`` scores.

    The first ``n`` points, before a full window exists, hold the mean of
    everything seen so far.
    """
    if n < 1:
        raise ValueError("window must be >= 1")
    s = np.asarray(scores, dtype=np.int64)
    csum = np.concatenate([[0], np.cumsum(s)])
    t = np.arange(1, s.size + 1)
    lo = np.maximum(t - n, 0)
    return (csum[t] - csum[lo]) / (t - lo)


def moving_average_series(
    records: Sequence[EvaluationRecord], n: int, known_users_only: bool = False
) -> MovingAverageSeries:
    sel = scored(records, known_users_only)
    seq = np.fromiter((r.seq for r in sel), dtype=np.int64, count=len(sel))
    return MovingAverageSeries(n, seq, moving_average(hits(sel), n))


def signed_statistic(n10: int, n01: int) -> float:
    d = n10 - n01
    if n10 + n01 == 0:
        return 0.0
    return float(np.sign(d) * d * d / (n10 + n01))


def critical_value(level: float) -> float:
    try:
        return CHI2_CRITICAL[level]
    except KeyError:
        raise ValueError(
            f"significance level must be one of {sorted(CHI2_CRITICAL)}, got {level}"
        ) from None


def mcnemar_signed(
    hits_a: Sequence[int] | np.ndarray,
    hits_b: Sequence[int] | np.ndarray,
    n: int,
    level: float = 0.01,
    seq: Sequence[int] | None = None,
) -> list[McNemarPoint]:
    """Signed McNemar statistic over a sliding window of ``n`` paired outcomes.

    ``n10`` counts A-hit/B-miss, so a positive statistic favours A. One point
    is emitted per position; positions before ``n - 1`` use every outcome
    seen so far and are flagged as warm-up.
    """
    a = np.asarray(hits_a, dtype=bool)
    b = np.asarray(hits_b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if n < 1:
        raise ValueError("window must be >= 1")
    crit = critical_value(level)
    c10 = np.concatenate([[0], np.cumsum(a & ~b)])
    c01 = np.concatenate([[0], np.cumsum(~a & b)])
    t = np.arange(1, a.size + 1)
    lo = np.maximum(t - n, 0)
    n10 = c10[t] - c10[lo]
    n01 = c01[t] - c01[lo]
    seq = np.arange(a.size) if seq is None else np.asarray(seq)
    points = []
    for k in range(a.size):
        x, y = int(n10[k]), int(n01[k])
        stat = signed_statistic(x, y)
        points.append(
            McNemarPoint(int(seq[k]), y, x, stat, abs(stat) > crit, k < n - 1)
        )
    return points


def align_hits(
    rec_a: Sequence[EvaluationRecord],
    rec_b: Sequence[EvaluationRecord],
    known_users_only: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair two models' outcomes on the events both of them scored."""
    a = {r.seq: r for r in scored(rec_a, known_users_only)}
    b = {r.seq: r for r in scored(rec_b, known_users_only)}
    common = np.array(sorted(a.keys() & b.keys()), dtype=np.int64)
    ha = np.array([a[s].hit for s in common], dtype=bool)
    hb = np.array([b[s].hit for s in common], dtype=bool)
    return common, ha, hb

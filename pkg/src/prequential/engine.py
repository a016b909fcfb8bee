"""Test-then-learn loop over an event stream."""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .core import IdMap, ModelDivergedError, RecommendationList, Recommender
from .stream import InteractionEvent

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class EvaluationRecord:
    seq: int
    model: str
    user_known: bool
    item_known: bool
    hit: bool
    rank: int | None
    recommend_us: float = 0.0
    update_us: float = 0.0
    from_previous: bool = False  # relaxed mode: hit found only in an earlier list


@dataclass
class EngineConfig:
    cutoff: int = 10
    relaxed_window: int = 0
    update_every: int = 1
    timing: bool = True

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ValueError("cutoff N must be >= 1")
        if self.relaxed_window < 0:
            raise ValueError("relaxed window must be >= 0")
        if self.update_every < 1:
            raise ValueError("update_every must be >= 1")


@dataclass
class ModelRun:
    name: str
    records: list[EvaluationRecord] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def status(self) -> str:
        return "failed" if self.failed else "complete"


def score_event(
    current: RecommendationList | None,
    true_item: int,
    previous: Sequence[RecommendationList] = (),
) -> tuple[bool, int | None, bool]:
    """Match the observed item against the current and earlier lists.

    ``previous`` is ordered oldest first. Returns ``(hit, rank,
    from_previous)``; the rank comes from the most recent list holding the
    item, and ``from_previous`` marks a hit the current list alone would
    have missed.
    """
    if current is not None:
        rank = current.rank_of(true_item)
        if rank is not None:
            return True, rank, False
    for lst in reversed(previous):
        rank = lst.rank_of(true_item)
        if rank is not None:
            return True, rank, True
    return False, None, False


def _elapsed_us(t0: int) -> float:
    return (time.perf_counter_ns() - t0) / 1000.0


def run_prequential(
    stream: Iterable[InteractionEvent],
    models: Sequence[Recommender],
    config: EngineConfig | None = None,
    users: IdMap | None = None,
    items: IdMap | None = None,
    on_event: Callable[[int, Sequence[Recommender]], None] | None = None,
) -> dict[str, ModelRun]:
    """Evaluate every model on every event, in stream order.

    Each model first recommends (if it knows the user), the list is scored
    against the observed item, and only then is the event used to update
    the model. A model that diverges stops receiving events; the others
    carry on. ``on_event(seq, models)`` is called after all models have
    been updated with event ``seq``.
    """
    config = config or EngineConfig()
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        raise ValueError(f"model names must be unique: {names}")
    users = users if users is not None else IdMap()
    items = items if items is not None else IdMap()
    runs = {m.name: ModelRun(m.name) for m in models}
    n, w, timing = config.cutoff, config.relaxed_window, config.timing
    past: dict[str, dict[int, deque]] = {m.name: {} for m in models}

    for ev in stream:
        u = users.intern(ev.user)
        i = items.intern(ev.item)
        do_update = ev.seq % config.update_every == 0
        for model in models:
            run = runs[model.name]
            if run.failed:
                continue
            rec_us = upd_us = 0.0
            current = None
            user_known = model.knows_user(u)
            item_known = model.knows_item(i)
            if user_known:
                t0 = time.perf_counter_ns() if timing else 0
                current = model.recommend(u, n)
                if timing:
                    rec_us = _elapsed_us(t0)
            prev = past[model.name].get(u, ()) if w else ()
            hit, rank, from_prev = score_event(current, i, prev)
            if w and current is not None:
                past[model.name].setdefault(u, deque(maxlen=w)).append(current)

            if do_update:
                try:
                    t0 = time.perf_counter_ns() if timing else 0
                    model.update(u, i)
                    if timing:
                        upd_us = _elapsed_us(t0)
                except ModelDivergedError as exc:
                    log.warning("model %s aborted at event %d: %s", model.name, ev.seq, exc)
                    run.failed = True
                    run.error = f"event {ev.seq}: {exc}"
            run.records.append(
                EvaluationRecord(
                    ev.seq, model.name, user_known, item_known, hit, rank,
                    rec_us, upd_us, from_prev,
                )
            )
        if on_event is not None:
            on_event(ev.seq, models)
    return runs

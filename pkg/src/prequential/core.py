"""Shared recommender contract and identifier interning."""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np


class ModelDivergedError(RuntimeError):
    """Raised when an update leaves non-finite values in model state."""


@dataclass
class IdMap:
    forward: dict[Hashable, int] = field(default_factory=dict)
    reverse: list[Hashable] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.reverse)

    def __contains__(self, key: Hashable) -> bool:
        return key in self.forward

    def intern(self, key: Hashable) -> int:
        idx = self.forward.get(key)
        if idx is None:
            idx = len(self.reverse)
            self.forward[key] = idx
            self.reverse.append(key)
        return idx

    def key(self, idx: int) -> Hashable:
        return self.reverse[idx]


def intern(key: Hashable, idmap: IdMap) -> int:
    return idmap.intern(key)


@dataclass(frozen=True)
class RecommendationList:
    items: tuple[int, ...] = ()
    scores: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(zip(self.items, self.scores))

    def rank_of(self, item: int) -> int | None:
        """1-based position of ``item``, or None."""
        try:
            return self.items.index(item) + 1
        except ValueError:
            return None


def filter_seen(
    candidates: Sequence[tuple[int, float]], history: Iterable[int]
) -> list[tuple[int, float]]:
    seen = history if isinstance(history, (set, frozenset)) else set(history)
    return [(i, s) for i, s in candidates if i not in seen]


def top_n(scores: np.ndarray, n: int) -> RecommendationList:
    """Top-``n`` entries of a dense score vector.

    Entries equal to ``-inf`` are treated as unscoreable. Ties are broken by
    ascending index regardless of where the partition boundary falls.
    """
    valid = np.flatnonzero(scores > -np.inf)
    if n <= 0 or valid.size == 0:
        return RecommendationList()
    if valid.size <= n:
        cand = valid
    else:
        vals = scores[valid]
        kth = np.partition(vals, vals.size - n)[vals.size - n]
        above = valid[vals > kth]
        tied = valid[vals == kth][: n - above.size]
        cand = np.concatenate([above, tied])
    order = np.lexsort((cand, -scores[cand]))
    chosen = cand[order]
    return RecommendationList(
        tuple(int(i) for i in chosen), tuple(float(s) for s in scores[chosen])
    )


def top_n_sparse(scores: dict[int, float], n: int) -> RecommendationList:
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    return RecommendationList(
        tuple(i for i, _ in ranked), tuple(float(s) for _, s in ranked)
    )


class Recommender(abc.ABC):
    """Incremental item recommender over dense user and item indices.

    ``update`` is the only mutating entry point. Subclasses implement
    ``_learn`` and ``_recommend``; the base class owns user histories, which
    drive both ``knows_user`` and the seen-item filter.
    """

    def __init__(self, name: str, exclude_seen: bool = True) -> None:
        self.name = name
        self.exclude_seen = exclude_seen
        self.history: dict[int, set[int]] = {}
        self.items: set[int] = set()

    def knows_user(self, u: int) -> bool:
        return u in self.history

    def knows_item(self, i: int) -> bool:
        return i in self.items

    def recommend(self, u: int, n: int) -> RecommendationList:
        if u not in self.history:
            raise KeyError(f"{self.name}: unknown user {u}")
        return self._recommend(u, n)

    def update(self, u: int, i: int) -> None:
        hist = self.history.setdefault(u, set())
        new_pair = i not in hist
        hist.add(i)
        self.items.add(i)
        self._learn(u, i, new_pair)

    @abc.abstractmethod
    def _learn(self, u: int, i: int, new_pair: bool) -> None: ...

    @abc.abstractmethod
    def _recommend(self, u: int, n: int) -> RecommendationList: ...

    def _state_parts(self) -> Iterable[bytes]:
        return ()

    def state_digest(self) -> str:
        """Hash of the full model state, for replay comparisons."""
        h = hashlib.sha256()
        for u in sorted(self.history):
            h.update(f"{u}:{sorted(self.history[u])};".encode())
        for part in self._state_parts():
            h.update(part)
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"

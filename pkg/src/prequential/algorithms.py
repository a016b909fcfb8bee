"""Incremental item-prediction algorithms: ISGD, BPR-MF and user-based KNN."""

from __future__ import annotations

import heapq
import math

import numpy as np

from .core import ModelDivergedError, RecommendationList, Recommender, top_n, top_n_sparse

INIT_SCALE = 0.01
MAX_NEGATIVE_DRAWS = 100


class FactorModel(Recommender):
    """User and item factor matrices that grow as new indices arrive.

    Rows are drawn from U(-0.01, 0.01) with the model's own generator the
    first time an index is updated, user row before item row.
    """

    def __init__(
        self,
        name: str,
        factors: int = 20,
        learn_rate: float = 0.05,
        regularization: float = 0.01,
        seed: int = 42,
        exclude_seen: bool = True,
    ) -> None:
        super().__init__(name, exclude_seen)
        if factors < 1:
            raise ValueError("factors must be >= 1")
        self.k = factors
        self.eta = learn_rate
        self.lam = regularization
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.P = np.zeros((0, factors))
        self.Q = np.zeros((0, factors))
        self._user_known = np.zeros(0, dtype=bool)
        self._item_known = np.zeros(0, dtype=bool)
        self._item_list: list[int] = []

    @staticmethod
    def _grow(mat: np.ndarray, idx: int) -> np.ndarray:
        if idx < mat.shape[0]:
            return mat
        rows = max(idx + 1, 2 * mat.shape[0], 64)
        out = np.zeros((rows,) + mat.shape[1:], dtype=mat.dtype)
        out[: mat.shape[0]] = mat
        return out

    def _ensure_rows(self, u: int, i: int) -> None:
        if u >= self._user_known.shape[0] or not self._user_known[u]:
            self.P = self._grow(self.P, u)
            self._user_known = self._grow(self._user_known, u)
            self.P[u] = self.rng.uniform(-INIT_SCALE, INIT_SCALE, self.k)
            self._user_known[u] = True
        if i >= self._item_known.shape[0] or not self._item_known[i]:
            self.set_item_row(i, self.rng.uniform(-INIT_SCALE, INIT_SCALE, self.k))

    def set_rows(self, u: int, i: int, p, q) -> None:
        """Register ``(u, i)`` without learning and overwrite both rows.

        Used to pin factor values in tests and worked examples.
        """
        hist = self.history.setdefault(u, set())
        hist.add(i)
        self.items.add(i)
        self._ensure_rows(u, i)
        self.P[u] = p
        self.Q[i] = q

    def set_item_row(self, i: int, q) -> None:
        self.items.add(i)
        if i >= self._item_known.shape[0] or not self._item_known[i]:
            self.Q = self._grow(self.Q, i)
            self._item_known = self._grow(self._item_known, i)
            self._item_known[i] = True
            self._item_list.append(i)
        self.Q[i] = q

    def score(self, u: int, i: int) -> float:
        return float(self.P[u] @ self.Q[i])

    def _recommend(self, u: int, n: int) -> RecommendationList:
        m = self._item_known.shape[0]
        scores = self.Q[:m] @ self.P[u]
        scores[~self._item_known] = -np.inf
        if self.exclude_seen:
            seen = np.fromiter(self.history[u], dtype=np.int64)
            scores[seen[seen < m]] = -np.inf
        return top_n(scores, n)

    def _check_finite(self, u: int, *items: int) -> None:
        with np.errstate(over="ignore", invalid="ignore"):
            total = float(self.P[u] @ self.P[u])
            for i in items:
                total += float(self.Q[i] @ self.Q[i])
        if not math.isfinite(total):
            raise ModelDivergedError(
                f"{self.name}: non-finite factors after updating user {u}, items {items} "
                f"(eta={self.eta}, lambda={self.lam}); learning rate too high?"
            )

    def _state_parts(self):
        users = np.flatnonzero(self._user_known)
        items = np.flatnonzero(self._item_known)
        yield users.tobytes() + self.P[users].tobytes()
        yield items.tobytes() + self.Q[items].tobytes()
        yield repr(self.rng.bit_generator.state).encode()


class ISGD(FactorModel):
    """Single SGD step per event on squared error toward a target of 1."""

    def _learn(self, u: int, i: int, new_pair: bool) -> None:
        self._ensure_rows(u, i)
        isgd_step(self.P[u], self.Q[i], self.eta, self.lam)
        self._check_finite(u, i)


def isgd_step(p: np.ndarray, q: np.ndarray, eta: float, lam: float) -> None:
    """In-place update of one user row ``p`` and one item row ``q``.

    p += eta * (err * q - lam * p) and q += eta * (err * p_old - lam * q),
    with err = 1 - p.q, written as scale-and-add to avoid temporaries.
    """
    err = 1.0 - float(p @ q)
    decay = 1.0 - eta * lam
    p_old = p.copy()
    p *= decay
    p += (eta * err) * q
    q *= decay
    q += (eta * err) * p_old


class BPRMF(FactorModel):
    """Pairwise ranking SGD with ``samples`` uniform negatives per event."""

    def __init__(self, name: str, samples: int = 1, **kw) -> None:
        super().__init__(name, **kw)
        if samples < 1:
            raise ValueError("samples must be >= 1")
        self.samples = samples

    def _draw_negative(self, hist: set[int]) -> int | None:
        items = self._item_list
        if len(items) <= len(hist):
            return None
        for _ in range(MAX_NEGATIVE_DRAWS):
            j = items[int(self.rng.integers(len(items)))]
            if j not in hist:
                return j
        return None

    def _learn(self, u: int, i: int, new_pair: bool) -> None:
        self._ensure_rows(u, i)
        hist = self.history[u]
        for _ in range(self.samples):
            j = self._draw_negative(hist)
            if j is None:
                continue
            bpr_step(self.P[u], self.Q[i], self.Q[j], self.eta, self.lam)
            self._check_finite(u, i, j)


def bpr_step(p: np.ndarray, qi: np.ndarray, qj: np.ndarray, eta: float, lam: float) -> None:
    diff = qi - qj
    x = float(p @ diff)
    # g = 1 / (1 + e^x), evaluated without overflow
    if x >= 0:
        z = math.exp(-x)
        g = z / (1.0 + z)
    else:
        g = 1.0 / (1.0 + math.exp(x))
    decay = 1.0 - eta * lam
    step = eta * g
    p_old = p.copy()
    p *= decay
    p += step * diff
    qi *= decay
    qi += step * p_old
    qj *= decay
    qj -= step * p_old


class UserKNN(Recommender):
    """User-based neighbourhood model with incrementally maintained cosine.

    Pairwise intersection counts are kept sparse and symmetric; cosine is
    derived on demand from the counts and the history sizes.
    """

    def __init__(self, name: str, neighbors: int = 50, exclude_seen: bool = True) -> None:
        super().__init__(name, exclude_seen)
        if neighbors < 1:
            raise ValueError("neighbors must be >= 1")
        self.neighbors = neighbors
        self.item_users: dict[int, set[int]] = {}
        self.overlap: dict[int, dict[int, int]] = {}

    def _learn(self, u: int, i: int, new_pair: bool) -> None:
        row = self.overlap.setdefault(u, {})
        if not new_pair:
            return
        holders = self.item_users.setdefault(i, set())
        for v in holders:
            row[v] = row.get(v, 0) + 1
            other = self.overlap[v]
            other[u] = other.get(u, 0) + 1
        holders.add(u)

    def cosine(self, u: int, v: int) -> float:
        c = self.overlap.get(u, {}).get(v, 0)
        if c == 0:
            return 0.0
        return c / math.sqrt(len(self.history[u]) * len(self.history[v]))

    def nearest(self, u: int) -> list[tuple[int, float]]:
        nu = len(self.history[u])
        hist = self.history
        sims = ((v, c / math.sqrt(nu * len(hist[v]))) for v, c in self.overlap[u].items())
        return heapq.nsmallest(self.neighbors, sims, key=lambda vs: (-vs[1], vs[0]))

    def _recommend(self, u: int, n: int) -> RecommendationList:
        scores: dict[int, float] = {}
        for v, sim in self.nearest(u):
            for i in self.history[v]:
                scores[i] = scores.get(i, 0.0) + sim
        if self.exclude_seen:
            for i in self.history[u]:
                scores.pop(i, None)
        return top_n_sparse(scores, n)

    def _state_parts(self):
        for u in sorted(self.overlap):
            yield f"{u}>{sorted(self.overlap[u].items())};".encode()


ALGORITHMS = {
    "isgd": ISGD,
    "bprmf": BPRMF,
    "userknn": UserKNN,
}


def build(kind: str, name: str | None = None, **params) -> Recommender:
    try:
        cls = ALGORITHMS[kind.lower()]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {kind!r}; choose from {', '.join(ALGORITHMS)}"
        ) from None
    return cls(name or kind, **params)

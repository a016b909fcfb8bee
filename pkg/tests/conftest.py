from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from prequential.stream import InteractionEvent

MOVIELENS_ENV = "MOVIELENS_1M_RATINGS"
_DEFAULT_LOCATIONS = ("data/ml-1m/ratings.dat", "ml-1m/ratings.dat")


def movielens_path() -> Path | None:
    """Location of the public MovieLens-1M ``ratings.dat``, if available."""
    env = os.environ.get(MOVIELENS_ENV)
    if env:
        return Path(env)
    root = Path(__file__).resolve().parent.parent
    for rel in _DEFAULT_LOCATIONS:
        p = root / rel
        if p.is_file():
            return p
    return None


def random_events(rng: np.random.Generator, n_events: int, n_users: int, n_items: int):
    return [
        InteractionEvent(t, f"u{int(rng.integers(n_users))}", f"i{int(rng.integers(n_items))}")
        for t in range(n_events)
    ]


def write_movielens_like(path: Path, n_users: int = 6014, n_items: int = 3232,
                         mean_events: float = 37.6, zipf: float = 0.75,
                         filler: float = 0.5, seed: int = 7) -> Path:
    """Write a synthetic stream in the ``user::item::rating::timestamp`` layout.

    Shaped after the five-star subset of MovieLens-1M: users arrive over
    time and rate a lognormal number of distinct items in a short burst,
    items follow a Zipf-like popularity curve. Every generated event is a
    5-star rating; ``filler`` extra lower ratings per event exercise the
    rating filter.
    """
    rng = np.random.default_rng(seed)
    pop = 1.0 / np.arange(1, n_items + 1) ** zipf
    pop = pop[rng.permutation(n_items)]
    pop /= pop.sum()
    mu = np.log(mean_events) - 0.5
    counts = np.clip(np.rint(rng.lognormal(mu, 1.0, n_users)), 1, n_items // 2).astype(int)
    starts = np.sort(rng.uniform(0, 3e7, n_users))
    rows = []
    for u in range(n_users):
        items = rng.choice(n_items, size=counts[u], replace=False, p=pop)
        times = starts[u] + np.cumsum(rng.exponential(120.0, counts[u]))
        for i, t in zip(items, times):
            rows.append((int(t), u + 1, int(i) + 1, 5))
        n_fill = rng.binomial(counts[u], filler)
        for i, t in zip(rng.integers(0, n_items, n_fill), rng.choice(times, n_fill)):
            rows.append((int(t), u + 1, int(i) + 1, int(rng.integers(1, 5))))
    order = rng.permutation(len(rows))
    lines = [f"{u}::{i}::{r}::{978300000 + t}" for t, u, i, r in (rows[k] for k in order)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def movielens_like(tmp_path_factory) -> Path:
    return write_movielens_like(tmp_path_factory.mktemp("synth") / "ratings.dat")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


class _Criterion:
    def __init__(self, number: int, title: str) -> None:
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            status = "PASS"
            note = self.detail
        else:
            status = "FAIL"
            note = f"{self.detail} {str(exc).splitlines()[0] if str(exc) else exc_type.__name__}".strip()
        ACCEPTANCE_RESULTS[self.number] = (status, f"{self.title}: {note}" if note else self.title)
        print(f"[{status}] criterion {self.number}: {ACCEPTANCE_RESULTS[self.number][1]}")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, text = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {text}")

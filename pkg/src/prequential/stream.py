"""Loading chronologically ordered user-item event streams from delimited files."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

COLUMN_NAMES = ("user", "item", "rating", "timestamp")


class StreamError(Exception):
    """Base class for stream loading problems."""


class ParseError(StreamError):
    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyStreamError(StreamError):
    pass


class StreamConfigError(StreamError, ValueError):
    pass


@dataclass(frozen=True, slots=True)
class InteractionEvent:
    seq: int
    user: str
    item: str
    rating: float | None = None
    timestamp: int | None = None


@dataclass(frozen=True)
class StreamSpec:
    """How to read one event file.

    ``delimiter`` is normally a single character. The multi-character
    ``"::"`` separator of the MovieLens-1M ``ratings.dat`` file is accepted
    as the one exception.
    """

    path: str | Path
    columns: tuple[str, ...] = ("user", "item")
    delimiter: str = "\t"
    rating_threshold: float | None = None
    dedup: bool = False
    header: bool = False
    skip_bad_lines: bool = False

    def __post_init__(self) -> None:
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if len(self.delimiter) != 1 and self.delimiter != "::":
            raise StreamConfigError(
                f"delimiter must be a single character or '::', got {self.delimiter!r}"
            )
        unknown = [c for c in cols if c not in COLUMN_NAMES]
        if unknown:
            raise StreamConfigError(f"unknown column name(s): {', '.join(unknown)}")
        if len(set(cols)) != len(cols):
            raise StreamConfigError("each column may be named only once")
        if "user" not in cols or "item" not in cols:
            raise StreamConfigError("column order must include 'user' and 'item'")
        if self.rating_threshold is not None and "rating" not in cols:
            raise StreamConfigError("rating threshold configured but no rating column")


MOVIELENS_1M = dict(
    columns=("user", "item", "rating", "timestamp"),
    delimiter="::",
    rating_threshold=5.0,
)


@dataclass
class StreamCounts:
    lines: int = 0
    skipped: int = 0
    filtered: int = 0
    deduped: int = 0
    reordered: bool = False

    @property
    def events(self) -> int:
        return self.lines - self.skipped - self.filtered - self.deduped


@dataclass
class LoadedStream:
    events: list[InteractionEvent]
    counts: StreamCounts = field(default_factory=StreamCounts)
    spec: StreamSpec | None = None

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, idx):
        return self.events[idx]


def parse_event_line(line: str, spec: StreamSpec, lineno: int = 0) -> InteractionEvent:
    """Map one delimited line onto an event. ``seq`` is left at -1."""
    parts = line.rstrip("\r\n").split(spec.delimiter)
    if len(parts) != len(spec.columns):
        raise ParseError(
            lineno, f"expected {len(spec.columns)} columns, found {len(parts)}"
        )
    fields = dict(zip(spec.columns, parts))
    rating = None
    timestamp = None
    if "rating" in fields:
        try:
            rating = float(fields["rating"])
        except ValueError:
            raise ParseError(lineno, f"non-numeric rating {fields['rating']!r}") from None
    if "timestamp" in fields:
        try:
            timestamp = int(fields["timestamp"])
        except ValueError:
            raise ParseError(
                lineno, f"non-integer timestamp {fields['timestamp']!r}"
            ) from None
    user, item = fields["user"].strip(), fields["item"].strip()
    if not user or not item:
        raise ParseError(lineno, "empty user or item key")
    return InteractionEvent(-1, user, item, rating, timestamp)


def apply_rating_filter(
    event: InteractionEvent, threshold: float | None
) -> InteractionEvent | None:
    """Keep events rated at or above ``threshold``; the rating is dropped."""
    if threshold is None:
        return event
    if event.rating is None:
        raise StreamConfigError(
            f"rating threshold {threshold} configured but event {event.seq} has no rating"
        )
    if event.rating >= threshold:
        return replace(event, rating=None)
    return None


def deduplicate(events: Iterable[InteractionEvent]) -> list[InteractionEvent]:
    seen: set[tuple[str, str]] = set()
    out = []
    for ev in events:
        key = (ev.user, ev.item)
        if key in seen:
            continue
        seen.add(key)
        out.append(ev)
    return out


def _read_lines(spec: StreamSpec) -> Iterable[tuple[int, str]]:
    path = Path(spec.path)
    if not path.is_file():
        raise FileNotFoundError(f"stream file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 and spec.header:
                continue
            if not line.strip():
                continue
            yield lineno, line


def load_stream(spec: StreamSpec) -> LoadedStream:
    """Parse, filter, order and optionally deduplicate a stream file.

    Filtering happens before sorting and deduplication happens after, so the
    retained occurrence of a repeated pair is the chronologically first one.
    ``seq`` numbers are assigned last and are contiguous from 0.
    """
    counts = StreamCounts()
    events: list[InteractionEvent] = []
    for lineno, line in _read_lines(spec):
        counts.lines += 1
        try:
            ev = parse_event_line(line, spec, lineno)
        except ParseError:
            if spec.skip_bad_lines:
                counts.skipped += 1
                continue
            raise
        kept = apply_rating_filter(ev, spec.rating_threshold)
        if kept is None:
            counts.filtered += 1
            continue
        events.append(kept)

    if "timestamp" in spec.columns and any(
        a.timestamp > b.timestamp for a, b in zip(events, events[1:])
    ):
        # list.sort is stable: ties keep file order
        events.sort(key=lambda e: e.timestamp)
        counts.reordered = True

    if spec.dedup:
        before = len(events)
        events = deduplicate(events)
        counts.deduped = before - len(events)

    if not events:
        raise EmptyStreamError(f"no events left in {spec.path} after filtering")
    events = [replace(ev, seq=n) for n, ev in enumerate(events)]
    return LoadedStream(events, counts, spec)


@dataclass(frozen=True)
class StreamStats:
    events: int
    users: int
    items: int
    distinct_pairs: int

    @property
    def sparsity(self) -> float:
        return 1.0 - self.events / (self.users * self.items)

    @property
    def sparsity_dedup(self) -> float:
        return 1.0 - self.distinct_pairs / (self.users * self.items)


def stream_stats(events: Sequence[InteractionEvent]) -> StreamStats:
    users = {e.user for e in events}
    items = {e.item for e in events}
    pairs = {(e.user, e.item) for e in events}
    return StreamStats(len(events), len(users), len(items), len(pairs))

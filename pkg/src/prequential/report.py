"""CSV writers and readers for summaries, series, raw records and manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from .engine import EvaluationRecord
from .stats import McNemarPoint, MovingAverageSeries, SummaryRow

RECORD_FIELDS = (
    "seq", "model", "user_known", "item_known", "hit", "rank",
    "from_previous", "recommend_us", "update_us",
)


def _bool(v: bool) -> str:
    return "true" if v else "false"


def safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def write_summary(rows: Sequence[SummaryRow], path: Path, cutoff: int = 10) -> Path:
    if not rows:
        raise ValueError("empty summary; nothing written")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", f"recall_at_{cutoff}", "mean_update_ms", "median_update_ms",
                    "events_scored", "events_total"])
        for r in rows:
            w.writerow([r.model, f"{r.recall:.6f}", f"{r.mean_update_ms:.6f}",
                        f"{r.median_update_ms:.6f}", r.events_scored, r.events_total])
    return path


def read_summary(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_meta(path: Path, **fields) -> Path:
    meta = Path(str(path) + ".meta")
    meta.write_text(" ".join(f"{k}={v}" for k, v in fields.items()) + "\n", encoding="utf-8")
    return meta


def read_meta(path: Path) -> dict[str, str]:
    text = Path(str(path) + ".meta").read_text(encoding="utf-8").strip()
    return dict(part.split("=", 1) for part in text.split())


def write_series(series, path: Path, **meta) -> list[Path]:
    """Write a moving-average series or a list of McNemar points.

    Returns the CSV path and its ``.meta`` companion, which records the
    window size and the warm-up boundary.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(series, MovingAverageSeries):
            w.writerow(["seq", "value"])
            for s, v in zip(series.seq, series.values):
                w.writerow([int(s), f"{v:.6f}"])
            window, kind = series.window, "moving_average"
        else:
            points: list[McNemarPoint] = list(series)
            w.writerow(["seq", "value", "significant"])
            for p in points:
                w.writerow([p.seq, f"{p.statistic:.6f}", _bool(p.significant)])
            window, kind = meta.pop("window"), "mcnemar"
    meta_path = _write_meta(path, kind=kind, window=window, warmup_boundary=window, **meta)
    return [path, meta_path]


def write_records(records: Iterable[EvaluationRecord], path: Path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([r.seq, r.model, _bool(r.user_known), _bool(r.item_known),
                        _bool(r.hit), "" if r.rank is None else r.rank,
                        _bool(r.from_previous), f"{r.recommend_us:.3f}", f"{r.update_us:.3f}"])
    return path


def read_records(path: Path) -> list[EvaluationRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: not a records file, missing {sorted(missing)}")
        for row in reader:
            out.append(EvaluationRecord(
                seq=int(row["seq"]),
                model=row["model"],
                user_known=row["user_known"] == "true",
                item_known=row["item_known"] == "true",
                hit=row["hit"] == "true",
                rank=int(row["rank"]) if row["rank"] else None,
                recommend_us=float(row["recommend_us"]),
                update_us=float(row["update_us"]),
                from_previous=row["from_previous"] == "true",
            ))
    return out


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, files: Sequence[Path], **body) -> Path:
    """Write ``manifest.json`` listing every artifact with its checksum.

    Must be called after all other files are closed.
    """
    body["files"] = [
        {"name": p.name, "bytes": p.stat().st_size, "sha256": sha256_file(p)}
        for p in files
    ]
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path

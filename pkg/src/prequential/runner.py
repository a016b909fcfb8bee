"""End-to-end experiment: load, evaluate, summarise, write."""

from __future__ import annotations

import datetime as dt
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import algorithms, report, stats
from .config import RunConfig
from .engine import ModelRun, run_prequential
from .stream import LoadedStream, load_stream

log = logging.getLogger(__name__)

OUTPUT_ENV = "PREQUENTIAL_OUTPUT_DIR"


class OutputDirError(OSError):
    pass


@dataclass
class RunResult:
    out_dir: Path
    runs: dict[str, ModelRun]
    summary: list[stats.SummaryRow]
    files: list[Path] = field(default_factory=list)
    skipped_pairs: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return any(r.failed for r in self.runs.values())


def prepare_output_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputDirError(f"cannot create output directory {path}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise OutputDirError(f"output directory is not writable: {path}")
    return path


def load(cfg: RunConfig) -> LoadedStream:
    stream = load_stream(cfg.stream)
    if cfg.max_events is not None and cfg.max_events < len(stream):
        stream = LoadedStream(stream.events[: cfg.max_events], stream.counts, stream.spec)
    return stream


def run_experiment(cfg: RunConfig, stream: LoadedStream | None = None) -> RunResult:
    """Run every configured model over the stream and write all outputs.

    The stream is loaded before the output directory is touched, so a bad
    input leaves nothing behind.
    """
    t_start = time.perf_counter()
    started_at = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    if stream is None:
        stream = load(cfg)
    t_loaded = time.perf_counter()

    out = prepare_output_dir(Path(cfg.output_dir))
    models = [algorithms.build(a.kind, a.name, **cfg.model_params(a)) for a in cfg.algorithms]
    runs = run_prequential(stream, models, cfg.engine)
    t_evaluated = time.perf_counter()

    files: list[Path] = []
    cfg_path = out / "config.ini"
    cfg_path.write_text(cfg.dumps(), encoding="utf-8")
    files.append(cfg_path)

    rows = stats.overall_summary(runs, cfg.known_users_only)
    files.append(report.write_summary(rows, out / "summary.csv", cfg.engine.cutoff))

    for name, run in runs.items():
        series = stats.moving_average_series(run.records, cfg.window, cfg.known_users_only)
        files += report.write_series(series, out / f"{report.safe_name(name)}_ma.csv", model=name)

    skipped = []
    pairs = cfg.mcnemar_pairs
    for a, b in pairs:
        if runs[a].failed or runs[b].failed:
            skipped.append(f"{a}:{b}")
            log.warning("skipping McNemar %s vs %s: a model did not complete", a, b)
            continue
        seq, ha, hb = stats.align_hits(runs[a].records, runs[b].records, cfg.known_users_only)
        points = stats.mcnemar_signed(ha, hb, cfg.window, cfg.level, seq)
        path = out / f"mcnemar_{report.safe_name(a)}_vs_{report.safe_name(b)}.csv"
        files += report.write_series(
            points, path, window=cfg.window, level=cfg.level, first=a, second=b,
            comparisons=len(pairs),
        )

    if cfg.dump_records:
        for name, run in runs.items():
            files.append(report.write_records(run.records, out / f"records_{report.safe_name(name)}.csv"))

    t_done = time.perf_counter()
    report.write_manifest(
        out,
        files,
        started_at=started_at,
        config=cfg.to_dict(),
        stream={**asdict(stream.counts), "events_loaded": stream.counts.events,
                "events_evaluated": len(stream), "dedup": cfg.stream.dedup},
        models={
            name: {"status": run.status, "error": run.error, "records": len(run.records)}
            for name, run in runs.items()
        },
        mcnemar={"pairs": [f"{a}:{b}" for a, b in pairs], "comparisons": len(pairs),
                 "skipped": skipped, "level": cfg.level,
                 "correction": "none (raw pairwise tests)"},
        wall_clock_s={
            "load": round(t_loaded - t_start, 3),
            "evaluate": round(t_evaluated - t_loaded, 3),
            "total": round(t_done - t_start, 3),
        },
    )
    return RunResult(out, runs, rows, files, skipped)

"""Command-line interface: ``run``, ``inspect-stream`` and ``mcnemar``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import report, stats
from .config import DELIMITER_NAMES, AlgorithmSpec, ConfigError, RunConfig, parse_pairs
from .engine import EngineConfig
from .runner import OUTPUT_ENV, OutputDirError, load, run_experiment
from .stream import MOVIELENS_1M, StreamError, StreamSpec, load_stream, stream_stats

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2

CANONICAL_NAMES = {"isgd": "ISGD", "bprmf": "BPRMF", "userknn": "UserKNN"}

log = logging.getLogger("prequential")


def _add_stream_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("stream")
    g.add_argument("--input", help="event file (one event per line)")
    g.add_argument("--format", choices=["movielens", "plain"], default=None,
                   help="'movielens': ratings.dat layout (user::item::rating::timestamp), "
                        "rating threshold 5")
    g.add_argument("--columns", help="column order, e.g. user,item,rating,timestamp (default user,item)")
    g.add_argument("--delimiter", help="field separator: a single character, '::', or one of "
                   + ", ".join(DELIMITER_NAMES) + " (default tab)")
    g.add_argument("--rating-threshold", type=float,
                   help="keep events rated >= this value; the rating is then dropped")
    g.add_argument("--dedup", action="store_true", default=None,
                   help="keep only the first occurrence of each (user, item) pair")
    g.add_argument("--header", action="store_true", default=None, help="skip the first line")
    g.add_argument("--skip-bad-lines", action="store_true", default=None,
                   help="skip and count malformed lines instead of aborting")
    g.add_argument("--max-events", type=int, help="evaluate only the first N events")


def _stream_overrides(args: argparse.Namespace) -> dict:
    kw = {}
    if args.format == "movielens":
        kw.update(MOVIELENS_1M)
    if args.columns:
        kw["columns"] = tuple(c.strip() for c in args.columns.split(","))
    if args.delimiter:
        kw["delimiter"] = DELIMITER_NAMES.get(args.delimiter, args.delimiter)
    if args.rating_threshold is not None:
        kw["rating_threshold"] = args.rating_threshold
    for flag in ("dedup", "header", "skip_bad_lines"):
        if getattr(args, flag):
            kw[flag] = True
    if args.input:
        kw["path"] = args.input
    return kw


def _spec_from_args(args: argparse.Namespace) -> StreamSpec:
    kw = _stream_overrides(args)
    if "path" not in kw:
        raise ConfigError("--input is required")
    return StreamSpec(**kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prequential",
        description="Prequential (test-then-learn) evaluation of incremental top-N recommenders.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="evaluate algorithms over a stream and write CSV outputs",
        description="Load a stream, run the test-then-learn loop for every algorithm, and "
                    "write summary.csv, <model>_ma.csv, mcnemar_<A>_vs_<B>.csv, config.ini "
                    f"and manifest.json. ${OUTPUT_ENV} overrides the configured output "
                    "directory; --out overrides both.",
    )
    run.add_argument("--config", help="INI run configuration; other flags override it")
    _add_stream_args(run)
    g = run.add_argument_group("algorithms")
    g.add_argument("--algorithms",
                   help="comma list of isgd, bprmf, userknn, optionally Name=kind "
                        "(default ISGD,BPRMF,UserKNN)")
    g.add_argument("--factors", type=int, help="latent factors k (default 20)")
    g.add_argument("--learn-rate", type=float, help="SGD learning rate (default 0.05)")
    g.add_argument("--regularization", type=float, help="L2 weight (default 0.01)")
    g.add_argument("--bpr-samples", type=int, help="negative samples per event for BPRMF (default 1)")
    g.add_argument("--neighbors", type=int, help="UserKNN neighbourhood size (default 50)")
    g.add_argument("--seed", type=int, help="global RNG seed (default 42)")
    g.add_argument("--keep-seen", action="store_true", default=None,
                   help="do not remove a user's already-seen items from recommendations")
    g = run.add_argument_group("protocol")
    g.add_argument("--cutoff", "-N", type=int, help="recommendation list length N (default 10)")
    g.add_argument("--relaxed-window", type=int,
                   help="also match against the user's last W lists (default 0 = strict)")
    g.add_argument("--update-every", type=int, help="update the models every M events (default 1)")
    g.add_argument("--no-timing", action="store_true", default=None,
                   help="do not time recommend/update calls (durations recorded as 0)")
    g.add_argument("--known-users-only", action="store_true", default=None,
                   help="exclude cold-start events from recall denominators")
    g = run.add_argument_group("statistics")
    g.add_argument("--window", type=int, help="moving-average / McNemar window n (default 5000)")
    g.add_argument("--pairs", help="McNemar pairs A:B,... (default: first model vs each other)")
    g.add_argument("--level", type=float, choices=sorted(stats.CHI2_CRITICAL),
                   help="significance level (default 0.01)")
    g = run.add_argument_group("output")
    g.add_argument("--out", help="output directory")
    g.add_argument("--dump-records", action="store_true", default=None,
                   help="also write per-event records_<model>.csv")
    run.set_defaults(func=cmd_run)

    ins = sub.add_parser("inspect-stream", help="print dataset statistics (events, users, items, sparsity)")
    _add_stream_args(ins)
    ins.add_argument("--json", action="store_true", help="print JSON instead of a table")
    ins.set_defaults(func=cmd_inspect)

    mc = sub.add_parser("mcnemar", help="recompute a signed McNemar series from dumped records")
    mc.add_argument("first", help="records CSV of model A (positive statistic favours A)")
    mc.add_argument("second", help="records CSV of model B")
    mc.add_argument("--window", type=int, required=True)
    mc.add_argument("--level", type=float, default=0.01, choices=sorted(stats.CHI2_CRITICAL))
    mc.add_argument("--known-users-only", action="store_true")
    mc.add_argument("--out", help="output CSV (default: print summary only)")
    mc.set_defaults(func=cmd_mcnemar)
    return parser


def _parse_algorithms(text: str) -> list[AlgorithmSpec]:
    specs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, kind = chunk.rpartition("=")
        kind = kind.strip()
        name = name.strip() or CANONICAL_NAMES.get(kind.lower(), kind)
        specs.append(AlgorithmSpec(name, kind))
    return specs


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
        stream_kw = _stream_overrides(args)
        if stream_kw:
            cfg.stream = replace(cfg.stream, **stream_kw)
    else:
        cfg = RunConfig(stream=_spec_from_args(args))

    if args.algorithms:
        cfg.algorithms = _parse_algorithms(args.algorithms)
        if args.pairs is None:
            cfg.pairs = None
    hyper = {
        "factors": ("isgd", "bprmf"), "learn_rate": ("isgd", "bprmf"),
        "regularization": ("isgd", "bprmf"), "bpr_samples": ("bprmf",),
        "neighbors": ("userknn",),
    }
    for flag, kinds in hyper.items():
        value = getattr(args, flag)
        if value is None:
            continue
        key = "samples" if flag == "bpr_samples" else flag
        for a in cfg.algorithms:
            if a.kind in kinds:
                a.params[key] = value

    eng = cfg.engine
    cfg.engine = EngineConfig(
        cutoff=args.cutoff if args.cutoff is not None else eng.cutoff,
        relaxed_window=args.relaxed_window if args.relaxed_window is not None else eng.relaxed_window,
        update_every=args.update_every if args.update_every is not None else eng.update_every,
        timing=False if args.no_timing else eng.timing,
    )
    if args.seed is not None:
        cfg.seed = args.seed
    if args.keep_seen:
        cfg.exclude_seen = False
    if args.known_users_only:
        cfg.known_users_only = True
    if args.window is not None:
        cfg.window = args.window
    if args.pairs is not None:
        cfg.pairs = parse_pairs(args.pairs)
    if args.level is not None:
        cfg.level = args.level
    if args.max_events is not None:
        cfg.max_events = args.max_events
    if args.dump_records:
        cfg.dump_records = True
    if os.environ.get(OUTPUT_ENV):
        cfg.output_dir = os.environ[OUTPUT_ENV]
    if args.out:
        cfg.output_dir = args.out
    # re-run validation after overrides
    return RunConfig(**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__})


def cmd_run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    stream = load(cfg)
    log.info("loaded %d events from %s", len(stream), cfg.stream.path)
    result = run_experiment(cfg, stream)
    for row in result.summary:
        print(f"{row.model:<12} recall@{cfg.engine.cutoff}={row.recall:.4f} "
              f"mean_update={row.mean_update_ms:.4f}ms status={row.status}")
    print(f"outputs written to {result.out_dir}")
    if result.partial:
        for name, run in result.runs.items():
            if run.failed:
                print(f"error: model {name} aborted: {run.error}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    loaded = load_stream(spec)
    events = loaded.events[: args.max_events] if args.max_events else loaded.events
    st = stream_stats(events)
    c = loaded.counts
    info = {
        "path": str(spec.path),
        "lines": c.lines, "skipped": c.skipped, "filtered": c.filtered,
        "deduped": c.deduped, "reordered": c.reordered,
        "events": st.events, "users": st.users, "items": st.items,
        "distinct_pairs": st.distinct_pairs,
        "sparsity": st.sparsity, "sparsity_dedup": st.sparsity_dedup,
    }
    if args.json:
        print(json.dumps(info, indent=2))
        return EXIT_OK
    print(f"{'Dataset':<24}{'Events':>10}{'Users':>9}{'Items':>9}{'Sparsity':>10}{'Sparsity*':>11}")
    print(f"{Path(spec.path).name:<24}{st.events:>10,}{st.users:>9,}{st.items:>9,}"
          f"{100 * st.sparsity:>9.2f}%{100 * st.sparsity_dedup:>10.2f}%")
    print(f"(* over distinct user-item pairs; lines={c.lines} skipped={c.skipped} "
          f"filtered={c.filtered} deduped={c.deduped})")
    return EXIT_OK


def cmd_mcnemar(args: argparse.Namespace) -> int:
    if args.window < 1:
        raise ConfigError(f"window size must be >= 1, got {args.window}")
    rec_a = report.read_records(Path(args.first))
    rec_b = report.read_records(Path(args.second))
    name_a = rec_a[0].model if rec_a else Path(args.first).stem
    name_b = rec_b[0].model if rec_b else Path(args.second).stem
    seq, ha, hb = stats.align_hits(rec_a, rec_b, args.known_users_only)
    points = stats.mcnemar_signed(ha, hb, args.window, args.level, seq)
    n_sig = sum(p.significant for p in points)
    pos = sum(p.significant and p.statistic > 0 for p in points)
    print(f"{name_a} vs {name_b}: {len(points)} points, {n_sig} significant at "
          f"{args.level} ({pos} favour {name_a}, {n_sig - pos} favour {name_b})")
    if args.out:
        report.write_series(points, Path(args.out), window=args.window, level=args.level,
                            first=name_a, second=name_b)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: input not found: {exc}", file=sys.stderr)
    except OutputDirError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
    except StreamError as exc:
        print(f"error: cannot load stream: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

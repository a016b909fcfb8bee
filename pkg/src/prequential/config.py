"""Run configuration: a flat INI file that round-trips through the manifest."""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .algorithms import ALGORITHMS
from .engine import EngineConfig
from .stats import CHI2_CRITICAL
from .stream import StreamSpec


class ConfigError(ValueError):
    pass


DELIMITER_NAMES = {"tab": "\t", "comma": ",", "space": " ", "semicolon": ";", "pipe": "|"}
_DELIMITER_ALIASES = {v: k for k, v in DELIMITER_NAMES.items()}

DEFAULT_ALGORITHMS = (("ISGD", "isgd"), ("BPRMF", "bprmf"), ("UserKNN", "userknn"))


@dataclass
class AlgorithmSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind.lower() not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.kind!r} for {self.name!r}; "
                f"choose from {', '.join(ALGORITHMS)}"
            )
        self.kind = self.kind.lower()


@dataclass
class RunConfig:
    stream: StreamSpec
    algorithms: list[AlgorithmSpec] = field(
        default_factory=lambda: [AlgorithmSpec(n, k) for n, k in DEFAULT_ALGORITHMS]
    )
    engine: EngineConfig = field(default_factory=EngineConfig)
    known_users_only: bool = False
    exclude_seen: bool = True
    window: int = 5000
    pairs: list[tuple[str, str]] | None = None
    level: float = 0.01
    output_dir: str = "results"
    seed: int = 42
    max_events: int | None = None
    dump_records: bool = False

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigError(f"window size must be >= 1, got {self.window}")
        if self.level not in CHI2_CRITICAL:
            raise ConfigError(
                f"significance level must be one of {sorted(CHI2_CRITICAL)}, got {self.level}"
            )
        if self.max_events is not None and self.max_events < 1:
            raise ConfigError("max_events must be >= 1")
        names = [a.name for a in self.algorithms]
        if not names:
            raise ConfigError("at least one algorithm is required")
        if len(set(names)) != len(names):
            raise ConfigError(f"algorithm names must be unique: {names}")
        if self.pairs is None:
            first, *rest = names
            self.pairs = [(first, other) for other in rest]
        self.pairs = [tuple(p) for p in self.pairs]
        for a, b in self.pairs:
            for name in (a, b):
                if name not in names:
                    raise ConfigError(f"McNemar pair refers to unknown model {name!r}")
            if a == b:
                raise ConfigError(f"McNemar pair compares {a!r} with itself")

    @property
    def mcnemar_pairs(self) -> list[tuple[str, str]]:
        """Configured pairs; by default the first model against each other one."""
        return list(self.pairs)

    def model_params(self, spec: AlgorithmSpec) -> dict:
        params = dict(spec.params)
        params.setdefault("exclude_seen", self.exclude_seen)
        if spec.kind in ("isgd", "bprmf"):
            params.setdefault("seed", self.seed)
        return params

    # serialisation

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        s = self.stream
        cp["stream"] = {
            "path": str(s.path),
            "columns": ",".join(s.columns),
            "delimiter": _DELIMITER_ALIASES.get(s.delimiter, s.delimiter),
            "rating_threshold": "" if s.rating_threshold is None else _fmt(s.rating_threshold),
            "dedup": _fmt(s.dedup),
            "header": _fmt(s.header),
            "skip_bad_lines": _fmt(s.skip_bad_lines),
            "max_events": "" if self.max_events is None else str(self.max_events),
        }
        e = self.engine
        cp["engine"] = {
            "cutoff": str(e.cutoff),
            "relaxed_window": str(e.relaxed_window),
            "update_every": str(e.update_every),
            "timing": _fmt(e.timing),
            "known_users_only": _fmt(self.known_users_only),
            "exclude_seen": _fmt(self.exclude_seen),
        }
        cp["stats"] = {
            "window": str(self.window),
            "pairs": ",".join(f"{a}:{b}" for a, b in self.mcnemar_pairs),
            "level": _fmt(self.level),
        }
        cp["run"] = {
            "output_dir": str(self.output_dir),
            "seed": str(self.seed),
            "dump_records": _fmt(self.dump_records),
        }
        for a in self.algorithms:
            cp[f"algorithm:{a.name}"] = {"kind": a.kind, **{k: _fmt(v) for k, v in a.params.items()}}
        return cp

    def dumps(self) -> str:
        buf = io.StringIO()
        self.to_parser().write(buf)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {sec: dict(self.to_parser()[sec]) for sec in self.to_parser().sections()}

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        try:
            st = cp["stream"]
        except KeyError:
            raise ConfigError("config has no [stream] section") from None
        if not st.get("path"):
            raise ConfigError("[stream] path is required")
        delim = st.get("delimiter", "tab")
        threshold = st.get("rating_threshold", "")
        try:
            spec = StreamSpec(
                path=st["path"],
                columns=tuple(c.strip() for c in st.get("columns", "user,item").split(",")),
                delimiter=DELIMITER_NAMES.get(delim, delim),
                rating_threshold=float(threshold) if threshold else None,
                dedup=_bool(st.get("dedup", "false")),
                header=_bool(st.get("header", "false")),
                skip_bad_lines=_bool(st.get("skip_bad_lines", "false")),
            )
            eng = cp["engine"] if cp.has_section("engine") else {}
            engine = EngineConfig(
                cutoff=int(eng.get("cutoff", 10)),
                relaxed_window=int(eng.get("relaxed_window", 0)),
                update_every=int(eng.get("update_every", 1)),
                timing=_bool(eng.get("timing", "true")),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        stats = cp["stats"] if cp.has_section("stats") else {}
        run = cp["run"] if cp.has_section("run") else {}
        algos = []
        for sec in cp.sections():
            if sec.startswith("algorithm:"):
                body = dict(cp[sec])
                kind = body.pop("kind", None)
                if kind is None:
                    raise ConfigError(f"[{sec}] needs a 'kind'")
                algos.append(AlgorithmSpec(sec.split(":", 1)[1], kind, {k: _value(v) for k, v in body.items()}))
        pairs = stats.get("pairs", "").strip()
        max_events = st.get("max_events", "")
        try:
            return cls(
                stream=spec,
                algorithms=algos or [AlgorithmSpec(n, k) for n, k in DEFAULT_ALGORITHMS],
                engine=engine,
                known_users_only=_bool(eng.get("known_users_only", "false")),
                exclude_seen=_bool(eng.get("exclude_seen", "true")),
                window=int(stats.get("window", 5000)),
                pairs=parse_pairs(pairs) if pairs else None,
                level=float(stats.get("level", 0.01)),
                output_dir=run.get("output_dir", "results"),
                seed=int(run.get("seed", 42)),
                max_events=int(max_events) if max_events else None,
                dump_records=_bool(run.get("dump_records", "false")),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        return cls.from_parser(cp)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        return cls.loads(p.read_text(encoding="utf-8"))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_dict(data)
        return cls.from_parser(cp)


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        a, sep, b = chunk.partition(":")
        if not sep or not a or not b:
            raise ConfigError(f"McNemar pair must look like A:B, got {chunk!r}")
        pairs.append((a.strip(), b.strip()))
    return pairs


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _value(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


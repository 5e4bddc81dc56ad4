"""Harness configuration read from a TOML file.

Unknown keys are rejected so typos fail at startup. Relative paths resolve
against the config file's directory. API keys are never stored here, only
the name of the environment variable that holds them.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .clients import DecodeParams, EndpointConfig
from .metrics.report import DIRECTIONS
from .metrics.scoring import OFFLINE_METRICS
from .preprocess.text import NormalizationConfig
from .tokenize.demo import DEMO_MODELS

ENDPOINT_ROLES = ("asr", "mt", "embeddings", "grader")


class ConfigError(ValueError):
    pass


def _check_keys(table: dict, allowed, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _fields(cls) -> list[str]:
    return [f.name for f in dataclasses.fields(cls)]


@dataclass(frozen=True)
class CorpusSettings:
    path: Path | None = None
    format: str | None = None
    expect: dict[str, int] | None = None


@dataclass(frozen=True)
class TokenizerSettings:
    # name -> model file path, or "demo:<name>" for a bundled model
    models: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class HarnessConfig:
    corpus: CorpusSettings = field(default_factory=CorpusSettings)
    normalization: NormalizationConfig | None = field(default_factory=NormalizationConfig)
    metrics: tuple[str, ...] = OFFLINE_METRICS
    endpoints: dict[str, EndpointConfig] = field(default_factory=dict)
    tokenizer: TokenizerSettings = field(default_factory=TokenizerSettings)
    max_in_flight: int | None = None
    output_dir: Path = Path("out")
    source: Path | None = None

    def endpoint(self, role: str) -> EndpointConfig:
        if role not in self.endpoints:
            raise ConfigError(f"no [endpoints.{role}] configured")
        return self.endpoints[role]

    def replace(self, **changes) -> HarnessConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Secret-free view for run logs."""
        return {
            "corpus": {"path": str(self.corpus.path) if self.corpus.path else None,
                       "format": self.corpus.format, "expect": self.corpus.expect},
            "normalization": self.normalization.to_dict() if self.normalization else None,
            "metrics": list(self.metrics),
            "endpoints": {k: v.to_dict() for k, v in sorted(self.endpoints.items())},
            "tokenizer": {"models": dict(self.tokenizer.models)},
            "max_in_flight": self.max_in_flight,
            "output_dir": str(self.output_dir),
        }


def _resolve(base: Path, value, where: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where} must be a non-empty string path")
    p = Path(value).expanduser()
    return p if p.is_absolute() else base / p


def _endpoint(table: dict, role: str) -> EndpointConfig:
    where = f"endpoints.{role}"
    if isinstance(table, dict) and "api_key" in table:
        raise ConfigError(f"[{where}] must not hold a key; set api_key_env instead")
    _check_keys(table, _fields(EndpointConfig), where)
    for required in ("base_url", "model_id"):
        if required not in table:
            raise ConfigError(f"[{where}] is missing {required!r}")
    params = table.get("decode_params", {})
    _check_keys(params, _fields(DecodeParams), f"{where}.decode_params")
    try:
        return EndpointConfig(**{**table, "decode_params": DecodeParams(**params)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def parse_config(data: dict, base_dir: Path = Path("."), *, check_paths: bool = True) -> HarnessConfig:
    _check_keys(data, ("corpus", "normalization", "metrics", "endpoints", "tokenizer", "pipeline",
                       "output_dir"), "top level")
    base_dir = Path(base_dir)

    c = data.get("corpus", {})
    _check_keys(c, ("path", "format", "expect"), "corpus")
    if c.get("format") not in (None, "jsonl", "tsv"):
        raise ConfigError(f"corpus.format must be jsonl or tsv, got {c['format']!r}")
    expect = c.get("expect")
    if expect is not None:
        _check_keys(expect, ("train", "test", "other"), "corpus.expect")
    corpus = CorpusSettings(
        path=_resolve(base_dir, c["path"], "corpus.path") if "path" in c else None,
        format=c.get("format"),
        expect=dict(expect) if expect is not None else None,
    )

    n = data.get("normalization", {})
    _check_keys(n, ["enabled"] + _fields(NormalizationConfig), "normalization")
    n = dict(n)
    enabled = n.pop("enabled", True)
    try:
        normalization = NormalizationConfig(**n) if enabled else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[normalization]: {exc}") from None

    m = data.get("metrics", {})
    _check_keys(m, ("set",), "metrics")
    metric_set = tuple(m.get("set", OFFLINE_METRICS))
    bad = [x for x in metric_set if x not in DIRECTIONS]
    if bad:
        raise ConfigError(f"unknown metric(s) in metrics.set: {bad}")

    e = data.get("endpoints", {})
    _check_keys(e, ENDPOINT_ROLES, "endpoints")
    endpoints = {role: _endpoint(table, role) for role, table in e.items()}

    t = data.get("tokenizer", {})
    _check_keys(t, ("models",), "tokenizer")
    models = {}
    for name, ref in t.get("models", {}).items():
        if isinstance(ref, str) and ref.startswith("demo:"):
            if ref[5:] not in DEMO_MODELS:
                raise ConfigError(f"tokenizer.models.{name}: unknown demo model {ref[5:]!r}")
            models[name] = ref
        else:
            models[name] = str(_resolve(base_dir, ref, f"tokenizer.models.{name}"))

    p = data.get("pipeline", {})
    _check_keys(p, ("max_in_flight",), "pipeline")
    mif = p.get("max_in_flight")
    if mif is not None and (not isinstance(mif, int) or mif < 1):
        raise ConfigError(f"pipeline.max_in_flight must be an integer >= 1, got {mif!r}")

    cfg = HarnessConfig(
        corpus=corpus,
        normalization=normalization,
        metrics=metric_set,
        endpoints=endpoints,
        tokenizer=TokenizerSettings(models),
        max_in_flight=mif,
        output_dir=_resolve(base_dir, data.get("output_dir", "out"), "output_dir"),
    )
    if check_paths:
        validate_paths(cfg)
    return cfg


def validate_paths(cfg: HarnessConfig) -> None:
    if cfg.corpus.path is not None and not cfg.corpus.path.is_file():
        raise ConfigError(f"corpus file not found: {cfg.corpus.path}")
    for name, ref in cfg.tokenizer.models.items():
        if not ref.startswith("demo:") and not Path(ref).is_file():
            raise ConfigError(f"tokenizer model {name!r} not found: {ref}")
    if cfg.output_dir.exists() and not cfg.output_dir.is_dir():
        raise ConfigError(f"output_dir is not a directory: {cfg.output_dir}")


def load_config(path) -> HarnessConfig:
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomli.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dataclasses.replace(parse_config(data, path.resolve().parent), source=path)

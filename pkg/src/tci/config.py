"""Run configuration: flat sectioned key-value files with full defaults.

Every setting has a default; a config file only overrides what it names.
The resolved configuration is echoed into the run manifest so a run can
be replayed from its manifest alone.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .ipc import LEVELS


@dataclass
class RunConfig:
    # paths
    corpus: str = ""
    corpus_format: str = "jsonl"
    ipc_texts: str = ""
    embeddings: str = ""
    # graph
    knn_k: int = 5
    sim_threshold: float = 0.0
    # train
    epochs: int = 100
    learning_rate: float = 0.05
    negatives_per_positive: int = 5
    layers: int = 2
    holdout_fraction: float = 0.1
    # metrics
    depth_k: float = 1.0
    ipc_level: str = "subclass"
    min_support: int = 1
    distance_penalty: str = "auto"      # "auto" (diameter + 1) or a number
    # stats
    log1p_transform: bool = False
    kde_bandwidth: str = "auto"         # "auto" (Silverman) or a number
    # run
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if self.corpus_format not in ("jsonl", "tsv"):
            raise ConfigError(f"unknown corpus format: {self.corpus_format}")
        if self.ipc_level not in LEVELS:
            raise ConfigError(f"unknown ipc level: {self.ipc_level}")
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.min_support < 1:
            raise ConfigError("min_support must be >= 1")
        if not (0.0 <= self.holdout_fraction < 1.0):
            raise ConfigError("holdout_fraction must be in [0, 1)")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.distance_penalty != "auto":
            try:
                float(self.distance_penalty)
            except ValueError:
                raise ConfigError(
                    f"distance_penalty must be 'auto' or a number, "
                    f"got {self.distance_penalty!r}") from None
        if self.kde_bandwidth != "auto":
            try:
                bw = float(self.kde_bandwidth)
            except ValueError:
                raise ConfigError(
                    f"kde_bandwidth must be 'auto' or a number, "
                    f"got {self.kde_bandwidth!r}") from None
            if bw <= 0:
                raise ConfigError("kde_bandwidth must be positive")

    def require_inputs(self) -> None:
        """Paths named by the config must exist before a run starts."""
        for label, p in (("corpus", self.corpus),
                         ("embeddings", self.embeddings)):
            if not p:
                raise ConfigError(f"missing required path: {label}")
            if not Path(p).exists():
                raise ConfigError(f"{label} path does not exist: {p}")
        if self.ipc_texts and not Path(self.ipc_texts).exists():
            raise ConfigError(f"ipc_texts path does not exist: {self.ipc_texts}")

    def resolved_penalty(self) -> float | None:
        return None if self.distance_penalty == "auto" else float(self.distance_penalty)

    def resolved_bandwidth(self) -> float | None:
        return None if self.kde_bandwidth == "auto" else float(self.kde_bandwidth)

    def to_sections(self) -> dict[str, dict[str, str]]:
        """Stringified sectioned view, used for echoes and serialization."""
        return {
            "paths": {
                "corpus": self.corpus,
                "corpus_format": self.corpus_format,
                "ipc_texts": self.ipc_texts,
                "embeddings": self.embeddings,
            },
            "graph": {
                "knn_k": str(self.knn_k),
                "sim_threshold": repr(self.sim_threshold),
            },
            "train": {
                "epochs": str(self.epochs),
                "learning_rate": repr(self.learning_rate),
                "negatives_per_positive": str(self.negatives_per_positive),
                "layers": str(self.layers),
                "holdout_fraction": repr(self.holdout_fraction),
            },
            "metrics": {
                "depth_k": repr(self.depth_k),
                "ipc_level": self.ipc_level,
                "min_support": str(self.min_support),
                "distance_penalty": str(self.distance_penalty),
            },
            "stats": {
                "log1p_transform": "true" if self.log1p_transform else "false",
                "kde_bandwidth": str(self.kde_bandwidth),
            },
            "run": {
                "seed": str(self.seed),
                "jobs": str(self.jobs),
            },
        }


_FIELD_SECTIONS: dict[str, list[tuple[str, type]]] = {
    "paths": [("corpus", str), ("corpus_format", str),
              ("ipc_texts", str), ("embeddings", str)],
    "graph": [("knn_k", int), ("sim_threshold", float)],
    "train": [("epochs", int), ("learning_rate", float),
              ("negatives_per_positive", int), ("layers", int),
              ("holdout_fraction", float)],
    "metrics": [("depth_k", float), ("ipc_level", str),
                ("min_support", int), ("distance_penalty", str)],
    "stats": [("log1p_transform", bool), ("kde_bandwidth", str)],
    "run": [("seed", int), ("jobs", int)],
}


def _apply_sections(cfg: RunConfig, sections) -> RunConfig:
    known = {s: dict(opts) for s, opts in _FIELD_SECTIONS.items()}
    for section in sections:
        if section == "DEFAULT":
            continue
        if section not in known:
            raise ConfigError(f"unknown config section: [{section}]")
        for key, raw in sections[section].items():
            schema = known[section]
            if key not in schema:
                raise ConfigError(f"unknown key in [{section}]: {key}")
            typ = schema[key]
            try:
                if typ is bool:
                    lowered = str(raw).strip().lower()
                    if lowered not in ("true", "false", "1", "0", "yes", "no"):
                        raise ValueError(raw)
                    value = lowered in ("true", "1", "yes")
                else:
                    value = typ(str(raw).strip())
            except ValueError:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r}") from None
            setattr(cfg, key, value)
    return cfg


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Config from a file (if given) plus keyword overrides, validated."""
    cfg = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(str(path), encoding="utf-8")
        if not read:
            raise ConfigError(f"cannot read config file: {path}")
        _apply_sections(cfg, parser)
    for key, value in overrides.items():
        if value is None:
            continue
        if not hasattr(cfg, key):
            raise ConfigError(f"unknown config override: {key}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def config_from_sections(sections: dict[str, dict[str, str]]) -> RunConfig:
    """Rebuild a RunConfig from a manifest's echoed sections."""
    cfg = _apply_sections(RunConfig(), sections)
    cfg.validate()
    return cfg


def save_config(cfg: RunConfig, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    for section, opts in cfg.to_sections().items():
        parser[section] = opts
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)

"""Pipeline configuration: TOML file, CLI overrides, and the config hash
embedded in every artifact."""
from __future__ import annotations

import copy
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Any

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .base import ConfigurationError
from .serialize import config_hash as _hash

DEFAULTS: dict[str, dict[str, Any]] = {
    "paths": {
        "archive": "tweets.ndjson",
        "hashtags": "hashtags.txt",
        "stopwords": "stopwords.txt",
        "case_counts_primary": "",
        "case_counts_fallback": "",
        "output_dir": "out",
    },
    "window": {
        "start": "",
        "end": "",
    },
    "ingest": {
        "lang": "fa",
        "kinds": ["original"],
    },
    "normalize": {
        "strip_urls": True,
        "strip_mentions": True,
        "strip_emoji": True,
        "strip_punctuation": True,
        "strip_digits": "all_scripts",
        "char_map": [],  # [["from", "to"], ...]; empty means the built-in map
        "collapse_whitespace": True,
    },
    "lda": {
        "n_topics": 50,
        "alpha0": 0.0,  # 0 means 5 / n_topics
        "beta": 0.01,
        "iterations": 1000,
        "burn_in": 100,
        "optimize_interval": 10,
        "seed": 7,
        "min_doc_freq": 1,
        "max_doc_fraction": 1.0,
    },
    "cluster": {
        "candidate_ks": list(range(2, 17)),
        "k": 0,  # 0 means use the elbow choice
        "batch_size": 1024,
        "max_iters": 100,
        "per_cluster_n": 30,
        "seed": 11,
    },
    "annotate": {
        "session_id": "session-1",
        "annotators": ["annotator-a", "annotator-b"],
        "labels": [],  # empty means the default six-category set
    },
    "serve": {
        "host": "127.0.0.1",
        "port": 8765,
        "session_store": "sessions",
        "ui_dir": "",
    },
}


@dataclass
class PipelineConfig:
    data: dict[str, dict[str, Any]]
    source_path: str = ""

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.data[section]

    @property
    def hash(self) -> str:
        return _hash(self.data)

    def window(self) -> tuple[date, date] | None:
        start, end = self.data["window"]["start"], self.data["window"]["end"]
        if not start and not end:
            return None
        if not start or not end:
            raise ConfigurationError("window requires both start and end")
        lo, hi = date.fromisoformat(start), date.fromisoformat(end)
        if lo > hi:
            raise ConfigurationError(f"window start {lo} is after end {hi}")
        return lo, hi

    def out_path(self, name: str) -> Path:
        out = Path(self.data["paths"]["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        return out / name


def load_config(path: str | None, overrides: list[str] | None = None) -> PipelineConfig:
    """Resolve defaults <- TOML file <- ``--set section.key=value`` overrides."""
    data = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path, "rb") as fh:
                loaded = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid TOML in {path}: {exc}")
        for section, values in loaded.items():
            if section not in data:
                raise ConfigurationError(f"unknown config section [{section}]")
            if not isinstance(values, dict):
                raise ConfigurationError(f"[{section}] must be a table")
            for key, value in values.items():
                if key not in data[section]:
                    raise ConfigurationError(f"unknown config key {section}.{key}")
                data[section][key] = value
    for item in overrides or []:
        _apply_override(data, item)
    return PipelineConfig(data=data, source_path=path or "")


def _apply_override(data: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigurationError(f"override must look like section.key=value, got {item!r}")
    dotted, _, raw_value = item.partition("=")
    if dotted.count(".") != 1:
        raise ConfigurationError(f"override key must be section.key, got {dotted!r}")
    section, key = dotted.split(".")
    if section not in data or key not in data[section]:
        raise ConfigurationError(f"unknown config key {dotted!r}")
    try:
        parsed = tomllib.loads(f"v = {raw_value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = raw_value  # bare strings allowed without quotes
    current = data[section][key]
    if isinstance(current, bool) and not isinstance(parsed, bool):
        raise ConfigurationError(f"{dotted} expects a boolean, got {raw_value!r}")
    data[section][key] = parsed

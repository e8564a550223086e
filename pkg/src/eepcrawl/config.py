"""Crawler configuration, seed lists and seed partitioning.

The config file is flat TOML whose keys are the crawler parameters in
lower case (``max_ongoing_spiders = 10`` ...). Any key can be overridden
from the environment as ``EEPCRAWL_<KEY>``.
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import EepsiteId, InvalidURL, normalize_url

logger = logging.getLogger(__name__)

ENV_PREFIX = "EEPCRAWL_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CrawlConfig:
    # crawler parameters; defaults are the reference deployment values
    max_ongoing_spiders: int = 10
    max_crawling_attempts_on_error: int = 2
    max_discovery_attempts: int = 30 * 24
    max_discovery_duration: float = 30 * 24 * 60.0  # minutes
    max_discovery_single_threads: int = 50
    http_timeout: float = 30.0  # seconds
    initial_seeds: str = "seeds.txt"
    initial_seeds_batch_size: int = 394

    # deployment
    instance_id: int = 0
    instances: int = 1
    store: str = "eepcrawl.db"
    transport: str = "simnet"  # "simnet" or "proxy"
    simnet_spec: str = ""
    floodfill_hosts: str = ""  # live runs: file of floodfill-announced hosts
    proxy_host: str = "127.0.0.1"
    proxy_port: int = 4444
    discovery_interval: float = 3600.0  # seconds between probes of one eepsite
    horizon_days: float = 111.0
    max_pages: int = 25_000
    max_depth: int = 50
    epoch: float = 1_559_865_600.0  # simulated start, 2019-06-07T00:00:00Z

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        counts = ("max_ongoing_spiders", "max_crawling_attempts_on_error", "max_discovery_attempts",
                  "max_discovery_single_threads", "initial_seeds_batch_size", "instances",
                  "max_pages", "proxy_port")
        for name in counts:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("max_discovery_duration", "http_timeout", "discovery_interval", "horizon_days"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if not 0 <= self.instance_id < self.instances:
            raise ConfigError(f"instance_id {self.instance_id} outside 0..{self.instances - 1}")
        if self.transport not in ("simnet", "proxy"):
            raise ConfigError(f"unknown transport {self.transport!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_mapping(cls, data: Mapping) -> CrawlConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = {}
        for key, raw in data.items():
            values[key] = _coerce(key, known[key].type, raw)
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **changes) -> CrawlConfig:
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self


def _coerce(key: str, typ, raw):
    # field annotations are strings under postponed evaluation
    typ = {"int": int, "float": float, "str": str}.get(typ, typ)
    if isinstance(raw, bool):
        raise ConfigError(f"{key}: booleans are not accepted")
    try:
        if typ is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError("not an integer")
            return int(raw)
        if typ is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {raw!r} as {typ.__name__} ({exc})") from None


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    names = {f.name for f in fields(CrawlConfig)}
    out = {}
    for var, value in environ.items():
        if var.startswith(ENV_PREFIX):
            key = var[len(ENV_PREFIX):].lower()
            if key in names:
                out[key] = value
    return out


def load_config(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> CrawlConfig:
    """Defaults, then the TOML file (if any), then ``EEPCRAWL_*`` variables."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"FILE_NOT_FOUND: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    data.update(env_overrides(environ))
    return CrawlConfig.from_mapping(data)


# ------------------------------------------------------------- seeds


def parse_seeds(lines) -> list[EepsiteId]:
    seen: dict[EepsiteId, None] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            site = normalize_url(line)
        except InvalidURL as exc:
            logger.warning("seed line %d skipped (%s): %s", lineno, exc.reason, line)
            continue
        seen.setdefault(site, None)
    return list(seen)


def load_seeds(path: str | Path) -> list[EepsiteId]:
    """Read one eepsite URL per line, normalized and deduplicated in file order."""
    try:
        with open(path, encoding="utf-8") as fh:
            seeds = parse_seeds(fh)
    except FileNotFoundError:
        raise ConfigError(f"FILE_NOT_FOUND: {path}") from None
    if not seeds:
        raise ConfigError(f"EMPTY_SEEDS: no valid eepsite URL in {path}")
    return seeds


def partition_seeds(seeds: list, n_instances: int) -> list[list]:
    """Round-robin split: seed ``i`` goes to batch ``i % n_instances``."""
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")
    return [list(seeds[i::n_instances]) for i in range(n_instances)]

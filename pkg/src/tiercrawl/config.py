"""Crawl configuration: dataclasses plus loading from a YAML or JSON file.

The file format is versioned; keys mirror the dataclass fields::

    version: 1
    seeds: seeds.txt
    mode: classified_two_tier
    output: out/
    max_depth: 1
    workers: 4
    trim: {policy: BaseTrim, session_names: [sessionid, sid]}
    static: {timeout: 40, host_delay: 0.5, robots: true}
    headless: {idle_window: 2.0, max_wait: 30.0, pool_size: 1}
    classifier: {model: model.json, vote_threshold: 0.5}
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import List, Optional

import yaml

from .errors import ConfigError
from .uri_norm import DEFAULT_ORIGIN_NAMES, DEFAULT_SESSION_NAMES, TrimPolicy

CONFIG_VERSION = 1
BROWSER_ENDPOINT_ENV = "TIERCRAWL_BROWSER_ENDPOINT"
BROWSER_EXECUTABLE_ENV = "TIERCRAWL_BROWSER"

MODES = ("static_only", "headless_only", "basic_only", "naive_two_tier", "classified_two_tier")

DEFAULT_AD_DOMAINS = (
    "googlesyndication.com",
    "doubleclick.net",
    "googleadservices.com",
    "adnxs.com",
    "advertising.com",
    "adsrvr.org",
    "amazon-adsystem.com",
    "criteo.com",
    "outbrain.com",
    "taboola.com",
    "specificclick.net",
    "scorecardresearch.com",
    "moatads.com",
    "rubiconproject.com",
    "pubmatic.com",
    "openx.net",
)


@dataclass
class StaticConfig:
    timeout: float = 40.0
    max_redirects: int = 5
    user_agent: str = "tiercrawl/0.1 (+archival crawler)"
    host_delay: float = 0.5
    host_connections: int = 2
    robots: bool = True
    digest: str = "md5"
    http2: bool = False
    max_bytes: int = 20 * 1024 * 1024


@dataclass
class HeadlessConfig:
    endpoint: Optional[str] = None
    executable: Optional[str] = None
    idle_window: float = 2.0
    max_wait: float = 30.0
    paper_parity_load_event: bool = False
    pool_size: int = 1
    launch_timeout: float = 20.0
    extra_args: List[str] = field(default_factory=list)

    def resolved_endpoint(self) -> Optional[str]:
        return self.endpoint or os.environ.get(BROWSER_ENDPOINT_ENV) or None


@dataclass
class TrimConfig:
    policy: str = "NoTrim"
    origin_names: List[str] = field(default_factory=lambda: sorted(DEFAULT_ORIGIN_NAMES))
    session_names: List[str] = field(default_factory=lambda: sorted(DEFAULT_SESSION_NAMES))

    def build(self) -> TrimPolicy:
        return TrimPolicy.from_name(self.policy, self.origin_names, self.session_names)


@dataclass
class ClassifierConfig:
    model: Optional[str] = None
    vote_threshold: float = 0.5
    ad_domains: List[str] = field(default_factory=lambda: list(DEFAULT_AD_DOMAINS))


@dataclass
class CrawlConfig:
    seeds: Optional[str] = None
    mode: str = "static_only"
    output: str = "crawl-out"
    max_depth: int = 1
    workers: int = 4
    trim: TrimConfig = field(default_factory=TrimConfig)
    static: StaticConfig = field(default_factory=StaticConfig)
    headless: HeadlessConfig = field(default_factory=HeadlessConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    version: int = CONFIG_VERSION

    def validate(self) -> "CrawlConfig":
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "classified_two_tier" and not self.classifier.model:
            raise ConfigError("classified_two_tier requires classifier.model")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.workers < 1 or self.headless.pool_size < 1:
            raise ConfigError("workers and headless.pool_size must be >= 1")
        if not 0.0 <= self.classifier.vote_threshold <= 1.0:
            raise ConfigError("vote_threshold must lie in [0, 1]")
        try:
            self.trim.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    @property
    def policy(self) -> TrimPolicy:
        return self.trim.build()

    def replace(self, **changes) -> "CrawlConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = _SECTIONS.get((cls, name))
        kwargs[name] = _build(sub, value, f"{where}.{name}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_SECTIONS = {
    (CrawlConfig, "trim"): TrimConfig,
    (CrawlConfig, "static"): StaticConfig,
    (CrawlConfig, "headless"): HeadlessConfig,
    (CrawlConfig, "classifier"): ClassifierConfig,
}


def config_from_dict(data: dict) -> CrawlConfig:
    return _build(CrawlConfig, data, "config").validate()


def load_config(path) -> CrawlConfig:
    """Load a YAML (or JSON) config file; relative paths resolve against its directory."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = config_from_dict(data)
    root = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return p if p is None or os.path.isabs(p) else os.path.join(root, p)

    cfg.seeds = rel(cfg.seeds)
    cfg.output = rel(cfg.output)
    cfg.classifier.model = rel(cfg.classifier.model)
    return cfg

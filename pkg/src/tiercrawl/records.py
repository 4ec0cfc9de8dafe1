"""Fetch records, the JSON-lines crawl log, and seed-list reading."""
from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional, Tuple, Union

from .errors import MalformedUri
from .uri_norm import NormalizedUri, parse

STATIC = "static"
HEADLESS = "headless"
SEED = "seed"
TIERS = (STATIC, HEADLESS)

# Non-integer status markers for dereferences that produced no HTTP response.
TIMEOUT = "timeout"
DNS_FAILURE = "dns_failure"
CONNECTION_ERROR = "error"
ROBOTS_DISALLOWED = "robots"

LOG_FIELDS = ("uri", "tier", "status", "digest", "discovered", "started", "finished", "bytes")

Status = Union[int, str]


def content_digest(body: Optional[bytes], algorithm: str = "md5") -> Optional[str]:
    if body is None:
        return None
    return hashlib.new(algorithm, body).hexdigest()


@dataclass(frozen=True)
class FetchRecord:
    """One dereference of one URI by one tier."""

    uri: NormalizedUri
    tier: str
    status: Status
    digest: Optional[str] = None
    discovered: Tuple[NormalizedUri, ...] = ()
    started: float = 0.0
    finished: float = 0.0
    bytes: int = 0

    def __post_init__(self):
        if self.finished < self.started:
            raise ValueError("finished precedes started")
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")
        object.__setattr__(self, "discovered", tuple(self.discovered))

    @property
    def ok(self) -> bool:
        return isinstance(self.status, int) and 200 <= self.status < 300

    @property
    def elapsed(self) -> float:
        return self.finished - self.started

    def to_json(self) -> dict:
        return {
            "uri": str(self.uri),
            "tier": self.tier,
            "status": self.status,
            "digest": self.digest,
            "discovered": [str(u) for u in self.discovered],
            "started": self.started,
            "finished": self.finished,
            "bytes": self.bytes,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FetchRecord":
        missing = [k for k in LOG_FIELDS if k not in obj]
        if missing:
            raise ValueError(f"crawl log line lacks fields {missing}")
        return cls(
            uri=parse(obj["uri"]),
            tier=obj["tier"],
            status=obj["status"],
            digest=obj["digest"],
            discovered=tuple(parse(u) for u in obj["discovered"]),
            started=float(obj["started"]),
            finished=float(obj["finished"]),
            bytes=int(obj["bytes"]),
        )


def dumps_record(record: FetchRecord) -> str:
    return json.dumps(record.to_json(), sort_keys=True, ensure_ascii=False)


class CrawlLog:
    """Append-only JSON-lines crawl log; safe to share between threads via ``append``."""

    def __init__(self, path: Union[str, os.PathLike]):
        self.path = os.fspath(path)
        self._lock = threading.Lock()
        os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)

    def append(self, record: FetchRecord) -> None:
        line = dumps_record(record) + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)

    def __iter__(self) -> Iterator[FetchRecord]:
        return iter(read_log(self.path))


def write_log(records: Iterable[FetchRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps_record(r) + "\n")


def read_log(path) -> List[FetchRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(FetchRecord.from_json(json.loads(line)))
    return out


def read_seeds(path) -> List[NormalizedUri]:
    """Read a seed list: one URI per line, ``#`` comments and blank lines ignored."""
    seeds = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                seeds.append(parse(line))
            except MalformedUri as exc:
                raise MalformedUri(f"{path}:{lineno}: {exc}") from exc
    return seeds


def write_seeds(seeds: Iterable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in seeds:
            fh.write(f"{s}\n")

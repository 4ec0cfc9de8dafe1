"""Crawl reports, derived purely from a crawl's output logs."""
from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..errors import IoFailure
from ..frontier import frontier_algebra, frontier_keys, frontier_stats
from ..records import HEADLESS, STATIC, FetchRecord, read_log
from ..uri_norm import TrimPolicy, dedup_key

REPORT_VERSION = 1


def read_events(path) -> List[dict]:
    if not os.path.exists(path):
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def run_header(events: List[dict]) -> dict:
    for ev in events:
        if ev.get("event") == "run":
            return ev
    raise IoFailure("events log has no run header")


def policy_from_header(header: dict) -> TrimPolicy:
    return TrimPolicy.from_name(header["policy"], header.get("origin_names"), header.get("session_names"))


def tier_discoveries(records: List[FetchRecord], tier: str, policy: TrimPolicy) -> set:
    return {dedup_key(u, policy) for r in records if r.tier == tier for u in r.discovered}


@dataclass
class CrawlReport:
    mode: str
    policy: str
    seeds: int
    frontier_size: int
    crawl_rate: float
    completed: int
    elapsed: float
    per_tier: Dict[str, dict]
    decisions: Dict[str, int]
    headless_invocations: int
    load_outcomes: Dict[str, int]
    tier_overlap: Dict[str, int]
    failures: int
    failure_kinds: Dict[str, int] = field(default_factory=dict)
    version: int = REPORT_VERSION

    @property
    def pages_classified(self) -> int:
        return sum(self.decisions.values())

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "mode": self.mode,
            "policy": self.policy,
            "seeds": self.seeds,
            "frontier_size": self.frontier_size,
            "crawl_rate": self.crawl_rate,
            "completed": self.completed,
            "elapsed": self.elapsed,
            "per_tier": self.per_tier,
            "decisions": self.decisions,
            "pages_classified": self.pages_classified,
            "headless_invocations": self.headless_invocations,
            "load_outcomes": self.load_outcomes,
            "tier_overlap": self.tier_overlap,
            "failures": self.failures,
            "failure_kinds": self.failure_kinds,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_json(cls, obj: dict) -> "CrawlReport":
        obj = dict(obj)
        obj.pop("pages_classified", None)
        return cls(**obj)

    def table(self) -> str:
        rows = [
            ("mode", self.mode),
            ("trim policy", self.policy),
            ("seeds", self.seeds),
            ("|F| frontier size", self.frontier_size),
            ("t_URI (URIs/s)", f"{self.crawl_rate:.3f}"),
            ("completed URIs", self.completed),
            ("wall clock (s)", f"{self.elapsed:.2f}"),
            ("headless captures", self.headless_invocations),
            ("failures", self.failures),
        ]
        for tier, info in sorted(self.per_tier.items()):
            rows.append((f"{tier} fetches / URIs", f"{info['fetches']} / {info['uris']}"))
        if self.decisions:
            rows.append(("classified deferred / non-deferred",
                         f"{self.decisions.get('Deferred', 0)} / {self.decisions.get('NonDeferred', 0)}"))
        if self.load_outcomes:
            rows.append(("load outcomes", ", ".join(f"{k}={v}" for k, v in sorted(self.load_outcomes.items()))))
        if self.tier_overlap:
            o = self.tier_overlap
            rows.append(("discoveries static-only / headless-only / both",
                         f"{o['only_static']} / {o['only_headless']} / {o['both']}"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows) + "\n"


def build_report(out_dir, crawl_log: str = "crawl.jsonl", events_log: str = "events.jsonl") -> CrawlReport:
    """Recompute the report of a finished crawl from its logs; deterministic for a given log."""
    log_path = os.path.join(out_dir, crawl_log)
    if not os.path.exists(log_path):
        raise IoFailure(f"no crawl log at {log_path}")
    records = read_log(log_path)
    events = read_events(os.path.join(out_dir, events_log))
    header = run_header(events)
    policy = policy_from_header(header)
    stats = frontier_stats(records, policy)

    decisions = Counter(ev["label"] for ev in events if ev.get("event") == "classified")
    outcomes = Counter(ev["load_outcome"] for ev in events if ev.get("event") == "capture")
    failure_events = [ev for ev in events if ev.get("event") in ("fetch_failure", "worker_error")]
    overlap = {}
    if any(r.tier == HEADLESS for r in records) and any(r.tier == STATIC and r.discovered for r in records):
        ov = frontier_algebra(tier_discoveries(records, STATIC, policy), tier_discoveries(records, HEADLESS, policy))
        overlap = {"only_static": ov.only_a, "only_headless": ov.only_b, "both": ov.both}
    return CrawlReport(
        mode=header["mode"],
        policy=policy.name,
        seeds=header["seeds"],
        frontier_size=stats.frontier_size,
        crawl_rate=stats.crawl_rate,
        completed=stats.completed,
        elapsed=stats.elapsed,
        per_tier=stats.per_tier,
        decisions={k: decisions[k] for k in sorted(decisions)},
        headless_invocations=sum(1 for ev in events if ev.get("event") == "headless_invoked"),
        load_outcomes={k: outcomes[k] for k in sorted(outcomes)},
        tier_overlap=overlap,
        failures=len(failure_events),
        failure_kinds=dict(sorted(Counter(ev.get("error", "?") for ev in failure_events).items())),
    )


def crawl_frontier(out_dir, policy: Optional[TrimPolicy] = None) -> set:
    """The dedup keys of a finished crawl's frontier, recounted from its log."""
    if policy is None:
        policy = policy_from_header(run_header(read_events(os.path.join(out_dir, "events.jsonl"))))
    return frontier_keys(read_log(os.path.join(out_dir, "crawl.jsonl")), policy)

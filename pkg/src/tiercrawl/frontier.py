"""The deduplicating crawl frontier and the analytics run over crawl logs.

:class:`Frontier` is shared by every crawl worker.  Identity is the
:class:`~tiercrawl.uri_norm.DedupKey` under one active trim policy; claims are
breadth-first (lowest depth first, FIFO within a depth).  When given a path the
frontier journals every insertion and state change to an append-only JSON-lines
file and rebuilds its index from that journal on startup.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import json
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Set

from .errors import EmptyInput, PolicyMismatch
from .records import HEADLESS, SEED, STATIC, FetchRecord
from .uri_norm import DedupKey, NormalizedUri, TrimPolicy, dedup_key, parse


class EntryState(str, enum.Enum):
    PENDING = "pending"
    CLAIMED = "claimed"
    DONE = "done"
    FAILED = "failed"


class AddResult(str, enum.Enum):
    INSERTED = "inserted"
    DUPLICATE = "duplicate"


@dataclass
class FrontierEntry:
    uri: NormalizedUri
    dedup_key: DedupKey
    discovered_by: str
    depth: int
    state: EntryState = EntryState.PENDING
    seq: int = 0


class Frontier:
    def __init__(
        self,
        policy: TrimPolicy = TrimPolicy(),
        journal_path: Optional[str] = None,
    ):
        self.policy = policy
        self.journal_path = journal_path
        self._entries: Dict[str, FrontierEntry] = {}
        self._pending: list = []
        self._seq = itertools.count()
        self._claimed = 0
        self._lock = threading.Lock()
        self._changed = threading.Condition(self._lock)
        self._journal = None
        if journal_path:
            if os.path.exists(journal_path):
                self._replay(journal_path)
            self._journal = open(journal_path, "a", encoding="utf-8")

    # -- journal -----------------------------------------------------------
    def _write(self, obj: dict) -> None:
        if self._journal is not None:
            self._journal.write(json.dumps(obj, sort_keys=True) + "\n")
            self._journal.flush()

    def _replay(self, path: str) -> None:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if obj["op"] == "add":
                    uri = parse(obj["uri"])
                    key = dedup_key(uri, self.policy)
                    if key.key not in self._entries:
                        self._entries[key.key] = FrontierEntry(
                            uri, key, obj["by"], obj["depth"], seq=next(self._seq)
                        )
                elif obj["op"] == "state":
                    entry = self._entries.get(obj["key"])
                    if entry is not None:
                        entry.state = EntryState(obj["state"])
        for entry in self._entries.values():
            # claims in flight at crash time are handed out again
            if entry.state is EntryState.CLAIMED:
                entry.state = EntryState.PENDING
            if entry.state is EntryState.PENDING:
                heapq.heappush(self._pending, (entry.depth, entry.seq, entry.dedup_key.key))

    def close(self) -> None:
        with self._lock:
            if self._journal is not None:
                self._journal.close()
                self._journal = None

    # -- mutation ----------------------------------------------------------
    def add(
        self,
        uri: NormalizedUri,
        discovered_by: str = SEED,
        parent: Optional[FrontierEntry] = None,
    ) -> AddResult:
        if discovered_by not in (SEED, STATIC, HEADLESS):
            raise ValueError(f"unknown tier tag {discovered_by!r}")
        key = dedup_key(uri, self.policy)
        depth = 0 if parent is None else parent.depth + 1
        with self._lock:
            if key.key in self._entries:
                return AddResult.DUPLICATE
            entry = FrontierEntry(uri, key, discovered_by, depth, seq=next(self._seq))
            self._entries[key.key] = entry
            heapq.heappush(self._pending, (depth, entry.seq, key.key))
            self._write({"op": "add", "uri": str(uri), "by": discovered_by, "depth": depth})
            self._changed.notify()
            return AddResult.INSERTED

    def claim_next(self) -> Optional[FrontierEntry]:
        """Move the shallowest, oldest pending entry to CLAIMED and return it."""
        with self._lock:
            return self._claim_locked()

    def _claim_locked(self) -> Optional[FrontierEntry]:
        while self._pending:
            _, _, key = heapq.heappop(self._pending)
            entry = self._entries[key]
            if entry.state is EntryState.PENDING:
                entry.state = EntryState.CLAIMED
                self._claimed += 1
                self._write({"op": "state", "key": key, "state": "claimed"})
                return entry
        return None

    def claim_wait(self, timeout: Optional[float] = None) -> Optional[FrontierEntry]:
        """Block until an entry can be claimed or the frontier is exhausted.

        Returns None once nothing is pending and no claim is outstanding
        (outstanding claims may still add work), or when ``timeout`` elapses.
        """
        with self._changed:
            while True:
                entry = self._claim_locked()
                if entry is not None or self._claimed == 0:
                    return entry
                if not self._changed.wait(timeout):
                    return None

    def _finish(self, entry: FrontierEntry, state: EntryState) -> None:
        with self._changed:
            if entry.state is not EntryState.CLAIMED:
                raise ValueError(f"entry {entry.dedup_key.key} is {entry.state.value}, not claimed")
            entry.state = state
            self._claimed -= 1
            self._write({"op": "state", "key": entry.dedup_key.key, "state": state.value})
            self._changed.notify_all()

    def complete(self, entry: FrontierEntry) -> None:
        self._finish(entry, EntryState.DONE)

    def fail(self, entry: FrontierEntry) -> None:
        self._finish(entry, EntryState.FAILED)

    # -- inspection --------------------------------------------------------
    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __contains__(self, uri: NormalizedUri) -> bool:
        key = dedup_key(uri, self.policy).key
        with self._lock:
            return key in self._entries

    def keys(self) -> Set[DedupKey]:
        with self._lock:
            return {e.dedup_key for e in self._entries.values()}

    def entries(self) -> List[FrontierEntry]:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: e.seq)

    def counts(self) -> Counter:
        with self._lock:
            return Counter(e.state.value for e in self._entries.values())


# -- analytics over crawl logs ------------------------------------------------

@dataclass(frozen=True)
class FrontierStats:
    frontier_size: int
    crawl_rate: float
    completed: int
    elapsed: float
    per_tier: Dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "frontier_size": self.frontier_size,
            "crawl_rate": self.crawl_rate,
            "completed": self.completed,
            "elapsed": self.elapsed,
            "per_tier": self.per_tier,
        }


def frontier_keys(records: Iterable[FetchRecord], policy: TrimPolicy) -> Set[DedupKey]:
    """Every dedup key a crawl log shows entering the frontier."""
    keys = set()
    for r in records:
        keys.add(dedup_key(r.uri, policy))
        keys.update(dedup_key(u, policy) for u in r.discovered)
    return keys


def crawl_rate(records: Sequence[FetchRecord], policy: TrimPolicy = TrimPolicy()) -> float:
    """Completed URIs per wall-clock second over the span of the log."""
    if not records:
        return 0.0
    completed = len({dedup_key(r.uri, policy).key for r in records})
    span = max(r.finished for r in records) - min(r.started for r in records)
    if span <= 0:
        return float("inf")
    return completed / span


def frontier_stats(records: Sequence[FetchRecord], policy: TrimPolicy) -> FrontierStats:
    records = list(records)
    per_tier = {}
    for tier in (STATIC, HEADLESS):
        subset = [r for r in records if r.tier == tier]
        if subset:
            per_tier[tier] = {
                "fetches": len(subset),
                "uris": len({dedup_key(r.uri, policy).key for r in subset}),
                "discovered": len({dedup_key(u, policy).key for r in subset for u in r.discovered}),
                "busy_seconds": sum(r.elapsed for r in subset),
            }
    elapsed = (
        max(r.finished for r in records) - min(r.started for r in records) if records else 0.0
    )
    return FrontierStats(
        frontier_size=len(frontier_keys(records, policy)),
        crawl_rate=crawl_rate(records, policy),
        completed=len({dedup_key(r.uri, policy).key for r in records}),
        elapsed=elapsed,
        per_tier=per_tier,
    )


class DuplicateReport(NamedTuple):
    uri_duplicates: int
    uri_and_entity_duplicates: int
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def duplicate_report(records: Sequence[FetchRecord], policy: TrimPolicy) -> DuplicateReport:
    """Compare URI-key duplication against entity-body (digest) duplication.

    A record is a URI duplicate when an earlier record has the same dedup key,
    and an entity duplicate when an earlier record has the same digest.
    Treating URI duplication as the prediction and entity duplication as the
    truth gives TP/FP/FN/TN, and accuracy = (TP + TN) / total.
    """
    if not records:
        raise EmptyInput("duplicate_report needs at least one record")
    seen_keys: Set[str] = set()
    seen_digests: Set[str] = set()
    tp = fp = fn = tn = 0
    for r in records:
        if r.digest is None:
            raise ValueError(f"record for {r.uri} carries no content digest")
        key = dedup_key(r.uri, policy).key
        key_dup = key in seen_keys
        body_dup = r.digest in seen_digests
        seen_keys.add(key)
        seen_digests.add(r.digest)
        if key_dup and body_dup:
            tp += 1
        elif key_dup:
            fp += 1
        elif body_dup:
            fn += 1
        else:
            tn += 1
    total = tp + fp + fn + tn
    return DuplicateReport(tp + fp, tp, (tp + tn) / total, tp, fp, fn, tn)


class FrontierOverlap(NamedTuple):
    only_a: int
    only_b: int
    both: int

    @property
    def union(self) -> int:
        return self.only_a + self.only_b + self.both


def frontier_algebra(a: Iterable[DedupKey], b: Iterable[DedupKey]) -> FrontierOverlap:
    """Euler-diagram counts for two frontiers built under the same policy."""
    a, b = set(a), set(b)
    policies = {k.policy for k in a} | {k.policy for k in b}
    if len(policies) > 1:
        raise PolicyMismatch(f"frontiers mix policies: {sorted(p.name for p in policies)}")
    return FrontierOverlap(len(a - b), len(b - a), len(a & b))

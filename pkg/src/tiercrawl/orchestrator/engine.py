"""The crawl engine: a worker pool over the frontier, dispatching pages to tiers by mode.

Every mode fetches pages above the depth limit with its tier(s) and merely
dereferences (status and digest, no link extraction) the URIs found at the
depth limit.  Output is a directory of logs from which the report is derived:

``crawl.jsonl``     one FetchRecord per fetch
``events.jsonl``    run header, classifier decisions and tier failures
``features.jsonl``  feature vectors of every extracted page
``frontier.jsonl``  the frontier journal
``captures/``       final DOM and request log of each headless capture
``report.json``     the CrawlReport
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from typing import Callable, List, Optional

from ..classifier.features import DOM_ONLY, FULL, extract_features
from ..classifier.metrics import DEFERRED
from ..classifier.model import EnsembleModel, predict
from ..config import CrawlConfig
from ..domains import registrable_domain
from ..errors import BrowserUnavailable, ConfigError, FetchError, NavigationTimeout, NonHtml, NoSeeds
from ..frontier import Frontier, FrontierEntry
from ..records import HEADLESS, STATIC, CrawlLog, read_seeds
from ..static_tier import StaticFetchResult, StaticTier
from ..uri_norm import NormalizedUri
from .report import CrawlReport, build_report

log = logging.getLogger(__name__)

CRAWL_LOG = "crawl.jsonl"
EVENTS_LOG = "events.jsonl"
FEATURES_LOG = "features.jsonl"
FRONTIER_JOURNAL = "frontier.jsonl"
REPORT_FILE = "report.json"
CAPTURES_DIR = "captures"

NEEDS_HEADLESS = ("headless_only", "naive_two_tier", "classified_two_tier")


def capture_name(uri: NormalizedUri) -> str:
    return hashlib.sha1(str(uri).encode("utf-8")).hexdigest()[:16]


class _JsonLines:
    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def write(self, obj: dict) -> None:
        line = json.dumps(obj, sort_keys=True) + "\n"
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line)


class Crawler:
    """One crawl run.  Tiers may be injected (tests share a browser between runs)."""

    def __init__(self, config: CrawlConfig, seeds: Optional[List[NormalizedUri]] = None,
                 static_tier: Optional[StaticTier] = None, headless_tier=None,
                 model: Optional[EnsembleModel] = None):
        self.config = config.validate()
        self.policy = config.policy
        if seeds is None:
            if not config.seeds:
                raise NoSeeds("no seed list configured")
            seeds = read_seeds(config.seeds)
        if not seeds:
            raise NoSeeds("the seed list is empty")
        self.seeds = list(seeds)
        self.mode = config.mode
        self.model = model
        if self.mode == "classified_two_tier" and self.model is None:
            try:
                self.model = EnsembleModel.load(config.classifier.model)
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"cannot load model {config.classifier.model}: {exc}") from exc
        if self.model is not None:
            self.model.vote_threshold = config.classifier.vote_threshold
        self._own_static = static_tier is None
        self.static = static_tier or StaticTier(config.static)
        self._own_headless = False
        self.headless = headless_tier
        if self.mode in NEEDS_HEADLESS and self.headless is None:
            from ..headless.capture import HeadlessTier  # deferred: launches a browser

            try:
                self.headless = HeadlessTier(config.headless, config.static.digest)
            except BrowserUnavailable:
                self.close()
                raise
            self._own_headless = True

    def close(self):
        if self._own_static:
            self.static.close()
        if self._own_headless and self.headless is not None:
            self.headless.close()

    # -- output --------------------------------------------------------------
    def _prepare_output(self):
        out = self.config.output
        os.makedirs(os.path.join(out, CAPTURES_DIR), exist_ok=True)
        for name in (CRAWL_LOG, EVENTS_LOG, FEATURES_LOG, FRONTIER_JOURNAL, REPORT_FILE):
            path = os.path.join(out, name)
            if os.path.isfile(path):
                os.remove(path)
        self.crawl_log = CrawlLog(os.path.join(out, CRAWL_LOG))
        self.events = _JsonLines(os.path.join(out, EVENTS_LOG))
        self.features = _JsonLines(os.path.join(out, FEATURES_LOG))

    def _event(self, kind: str, uri: Optional[NormalizedUri] = None, **fields):
        obj = {"event": kind, "at": time.monotonic(), **fields}
        if uri is not None:
            obj["uri"] = str(uri)
        self.events.write(obj)

    # -- page handling ---------------------------------------------------------
    def _static_page(self, uri: NormalizedUri, speculative: bool = True) -> Optional[StaticFetchResult]:
        try:
            result = self.static.fetch_page(uri, speculative)
        except NonHtml as exc:
            self.crawl_log.append(exc.record)
            return None
        except FetchError as exc:
            if exc.record is not None:
                self.crawl_log.append(exc.record)
            self._event("fetch_failure", uri, tier=STATIC, error=type(exc).__name__, message=str(exc))
            return None
        self.crawl_log.append(result.record)
        return result

    def _headless_page(self, uri: NormalizedUri):
        self._event("headless_invoked", uri)
        try:
            capture = self.headless.fetch(uri)
        except NavigationTimeout as exc:
            capture = exc.capture
            self._event("fetch_failure", uri, tier=HEADLESS, error="NavigationTimeout", message=str(exc))
            if capture is None:
                return None
        except Exception as exc:  # CrashedTab after its retry, BrowserUnavailable, protocol errors
            self._event("fetch_failure", uri, tier=HEADLESS, error=type(exc).__name__, message=str(exc))
            return None
        self.crawl_log.append(capture.record)
        capture.persist(os.path.join(self.config.output, CAPTURES_DIR), capture_name(uri))
        self._event("capture", uri, load_outcome=capture.load_outcome, requests=len(capture.requests))
        return capture

    def _record_features(self, uri, result: StaticFetchResult, capture=None):
        """Write the page's feature vectors; return the dom_only one."""
        ad = self.config.classifier.ad_domains
        domain = registrable_domain(uri.host)
        dom = extract_features(result.dom_snapshot, result.external_scripts, None, domain, ad, uri, DOM_ONLY)
        row = {"uri": str(uri), "dom_only": dom.to_json()}
        if capture is not None:
            full = extract_features(result.dom_snapshot, result.external_scripts, capture, domain, ad, uri, FULL)
            row["full"] = full.to_json()
        self.features.write(row)
        return dom

    def _process_page(self, uri: NormalizedUri) -> List[tuple]:
        """Fetch a page with the mode's tiers; return (uri, tier) discoveries."""
        mode = self.mode
        found: List[tuple] = []
        if mode == "headless_only":
            capture = self._headless_page(uri)
            if capture is not None:
                found += [(u, HEADLESS) for u in capture.record.discovered]
            return found

        result = self._static_page(uri, speculative=mode != "basic_only")
        if result is None:
            return found
        found += [(u, STATIC) for u in result.record.discovered]
        if result.markup is None:  # error status or robots: nothing to extract
            return found

        run_headless = mode == "naive_two_tier"
        if mode == "classified_two_tier":
            ad = self.config.classifier.ad_domains
            vector = extract_features(
                result.dom_snapshot, result.external_scripts, None, registrable_domain(uri.host), ad, uri, DOM_ONLY
            )
            label, confidence = predict(self.model, vector)
            self._event("classified", uri, label=label, confidence=round(confidence, 6))
            run_headless = label == DEFERRED
        capture = self._headless_page(uri) if run_headless else None
        if capture is not None:
            found += [(u, HEADLESS) for u in capture.record.discovered]
        self._record_features(uri, result, capture)
        return found

    def _work(self, frontier: Frontier, errors: list):
        while True:
            entry = frontier.claim_wait()
            if entry is None:
                return
            try:
                self._handle(frontier, entry)
                frontier.complete(entry)
            except Exception as exc:  # keep the pool alive; the failure is logged
                log.exception("worker failed on %s", entry.uri)
                errors.append(exc)
                self._event("worker_error", entry.uri, error=type(exc).__name__, message=str(exc))
                frontier.fail(entry)

    def _handle(self, frontier: Frontier, entry: FrontierEntry):
        if entry.depth >= self.config.max_depth:
            self.crawl_log.append(self.static.dereference(entry.uri))
            return
        for uri, tier in self._process_page(entry.uri):
            frontier.add(uri, tier, parent=entry)

    def run(self) -> CrawlReport:
        self._prepare_output()
        self._event(
            "run",
            mode=self.mode,
            policy=self.policy.name,
            origin_names=sorted(self.policy.origin_names),
            session_names=sorted(self.policy.session_names),
            seeds=len(self.seeds),
            max_depth=self.config.max_depth,
            workers=self.config.workers,
        )
        frontier = Frontier(self.policy, os.path.join(self.config.output, FRONTIER_JOURNAL))
        try:
            for s in self.seeds:
                frontier.add(s)
            errors: list = []
            threads = [
                threading.Thread(target=self._work, args=(frontier, errors), name=f"crawl-{i}", daemon=True)
                for i in range(self.config.workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        finally:
            frontier.close()
        report = build_report(self.config.output)
        report.save(os.path.join(self.config.output, REPORT_FILE))
        return report


def run_crawl(config: CrawlConfig, seeds=None, static_tier=None, headless_tier=None, model=None) -> CrawlReport:
    """Run one crawl to completion and return its report (also written to the output dir)."""
    crawler = Crawler(config, seeds, static_tier, headless_tier, model)
    try:
        return crawler.run()
    finally:
        crawler.close()


def run_many(configs: List[CrawlConfig], runner: Callable = run_crawl, **kwargs) -> List[CrawlReport]:
    return [runner(c, **kwargs) for c in configs]

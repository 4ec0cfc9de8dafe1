"""The script-executing crawler tier.

Each capture runs in a fresh browser context (empty cache and cookie jar),
records every network request the page issues until the completion rule
fires, and serializes the post-execution DOM.
"""
from __future__ import annotations

import base64
import json
import logging
import os
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from ..config import HeadlessConfig
from ..domains import registrable_domain
from ..errors import BrowserUnavailable, CrashedTab, MalformedUri, NavigationTimeout
from ..records import CONNECTION_ERROR, HEADLESS, TIMEOUT, FetchRecord, content_digest
from ..uri_norm import NormalizedUri, parse
from .browser import Browser
from .cdp import ProtocolError
from .completion import FAILED, FINISHED, LOAD, REQUEST, TIMEOUT_EXPIRED, CompletionTracker

log = logging.getLogger(__name__)

FAILED_MARKER = "failed"
PENDING_MARKER = "pending"
_IGNORED_SCHEMES = ("data:", "blob:", "about:", "chrome", "devtools:", "ws:", "wss:")


@dataclass(frozen=True)
class CapturedRequest:
    uri: NormalizedUri
    status: Union[int, str]
    kind: str
    same_domain: bool

    def to_json(self) -> dict:
        return {"uri": str(self.uri), "status": self.status, "kind": self.kind, "same_domain": self.same_domain}


@dataclass
class HeadlessCapture:
    record: FetchRecord
    requests: List[CapturedRequest] = field(default_factory=list)
    final_dom: str = ""
    load_outcome: str = TIMEOUT_EXPIRED

    def persist(self, directory, name: str) -> None:
        """Write the final DOM and the request log next to the crawl log."""
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, name + ".html"), "w", encoding="utf-8") as fh:
            fh.write(self.final_dom)
        with open(os.path.join(directory, name + ".requests.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "uri": str(self.record.uri),
                    "load_outcome": self.load_outcome,
                    "requests": [r.to_json() for r in self.requests],
                },
                fh,
                indent=1,
                sort_keys=True,
            )


class _Hop:
    __slots__ = ("url", "kind", "status")

    def __init__(self, url, kind):
        self.url = url
        self.kind = kind
        self.status: Union[int, str] = PENDING_MARKER


def _capture_once(browser: Browser, uri: NormalizedUri, config: HeadlessConfig, digest: str) -> HeadlessCapture:
    conn = browser.conn
    ctx = conn.send("Target.createBrowserContext", {"disposeOnDetach": True})["browserContextId"]
    session = None
    try:
        target = conn.send("Target.createTarget", {"url": "about:blank", "browserContextId": ctx})["targetId"]
        session = conn.send("Target.attachToTarget", {"targetId": target, "flatten": True})["sessionId"]
        events = conn.subscribe(session)
        for method, params in (
            ("Inspector.enable", {}),
            ("Network.enable", {}),
            ("Page.enable", {}),
            ("Network.setCacheDisabled", {"cacheDisabled": True}),
        ):
            conn.send(method, params, session)

        hops: Dict[str, List[_Hop]] = {}
        order: List[_Hop] = []
        main_id: Optional[str] = None
        started = time.monotonic()
        tracker = CompletionTracker(config, started)
        nav = conn.send("Page.navigate", {"url": str(uri)}, session, timeout=config.max_wait + 5)
        nav_error = nav.get("errorText")

        while True:
            now = time.monotonic()
            decision = tracker.decide(now)
            if decision.complete:
                break
            try:
                msg = events.get(timeout=tracker.next_check(now) or 0.01)
            except queue.Empty:
                continue
            at = time.monotonic()
            method = msg.get("method")
            p = msg.get("params", {})
            if method == "Network.requestWillBeSent":
                rid = p["requestId"]
                url = p["request"]["url"]
                chain = hops.setdefault(rid, [])
                if p.get("redirectResponse") and chain:
                    chain[-1].status = p["redirectResponse"].get("status", chain[-1].status)
                hop = _Hop(url, (p.get("type") or "Other").lower())
                chain.append(hop)
                if not url.startswith(_IGNORED_SCHEMES):
                    order.append(hop)
                if main_id is None and p.get("type") == "Document":
                    main_id = rid
                tracker.record(at, REQUEST, rid)
            elif method == "Network.responseReceived":
                chain = hops.get(p["requestId"])
                if chain:
                    chain[-1].status = p["response"].get("status", chain[-1].status)
            elif method == "Network.loadingFinished":
                tracker.record(at, FINISHED, p["requestId"])
            elif method == "Network.loadingFailed":
                chain = hops.get(p["requestId"])
                if chain and chain[-1].status == PENDING_MARKER:
                    chain[-1].status = FAILED_MARKER
                tracker.record(at, FAILED, p["requestId"])
            elif method == "Page.loadEventFired":
                tracker.record(at, LOAD)
            elif method in ("Inspector.targetCrashed", "Inspector.detached", "Target.detachedFromTarget"):
                raise CrashedTab(f"tab for {uri} went away ({method})")

        outcome = decision.outcome
        final_dom = ""
        try:
            res = conn.send(
                "Runtime.evaluate",
                {"expression": "document.documentElement ? document.documentElement.outerHTML : ''",
                 "returnByValue": True},
                session,
                timeout=10,
            )
            final_dom = res.get("result", {}).get("value") or ""
        except (ProtocolError, TimeoutError) as exc:
            log.warning("could not serialize DOM of %s: %s", uri, exc)

        body = None
        if main_id is not None:
            try:
                res = conn.send("Network.getResponseBody", {"requestId": main_id}, session, timeout=10)
                raw = res.get("body", "")
                body = base64.b64decode(raw) if res.get("base64Encoded") else raw.encode("utf-8")
            except (ProtocolError, TimeoutError):
                body = None
        finished = time.monotonic()
    finally:
        if session is not None:
            conn.unsubscribe(session)
        try:
            conn.send("Target.disposeBrowserContext", {"browserContextId": ctx}, timeout=10)
        except (ProtocolError, CrashedTab, TimeoutError, BrowserUnavailable):
            pass

    page_domain = registrable_domain(uri.host)
    main_chain = hops.get(main_id, []) if main_id else []
    if main_chain:
        status = main_chain[-1].status
        if status == PENDING_MARKER:
            status = TIMEOUT
        elif status == FAILED_MARKER:
            status = CONNECTION_ERROR
    else:
        status = CONNECTION_ERROR if nav_error else TIMEOUT
    main_hops = set(map(id, main_chain))

    requests: List[CapturedRequest] = []
    for hop in order:
        if id(hop) in main_hops:
            continue
        try:
            ruri = parse(hop.url)
        except (MalformedUri, ValueError):
            continue
        if ruri != uri:
            requests.append(CapturedRequest(ruri, hop.status, hop.kind, registrable_domain(ruri.host) == page_domain))
    discovered = list(dict.fromkeys(r.uri for r in requests))

    record = FetchRecord(
        uri,
        HEADLESS,
        status,
        content_digest(body, digest) if body is not None else None,
        tuple(discovered),
        started,
        finished,
        len(body) if body is not None else 0,
    )
    capture = HeadlessCapture(record, requests, final_dom, outcome)
    if not main_chain or main_chain[-1].status == PENDING_MARKER:
        if outcome == TIMEOUT_EXPIRED:
            raise NavigationTimeout(f"{uri} produced no response within {config.max_wait}s", capture)
    return capture


class HeadlessTier:
    """A browser plus a bounded pool of concurrent captures."""

    def __init__(self, config: Optional[HeadlessConfig] = None, digest: str = "md5"):
        self.config = config or HeadlessConfig()
        self.digest = digest
        self._browser = Browser(self.config)
        self._pool = threading.BoundedSemaphore(self.config.pool_size)
        self._restart_lock = threading.Lock()

    def _restart(self):
        with self._restart_lock:
            if self._browser.conn.closed:
                log.warning("browser connection lost; relaunching")
                self._browser.close()
                self._browser = Browser(self.config)

    def fetch(self, uri: NormalizedUri) -> HeadlessCapture:
        """Capture ``uri``; a crashed tab is retried once before the error surfaces."""
        with self._pool:
            for attempt in (1, 2):
                try:
                    return _capture_once(self._browser, uri, self.config, self.digest)
                except (CrashedTab, BrowserUnavailable):
                    if attempt == 2:
                        raise
                    self._restart()
        raise AssertionError("unreachable")

    def close(self):
        self._browser.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def fetch_headless(uri: NormalizedUri, config: Optional[HeadlessConfig] = None) -> HeadlessCapture:
    with HeadlessTier(config) as tier:
        return tier.fetch(uri)

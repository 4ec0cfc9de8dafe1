"""The non-executing crawler tier and its wget-like basic-fetch baseline.

:class:`StaticTier` dereferences a page, scans its markup for declared links,
fetches the page's external scripts and mines them (and the inline scripts)
for URI-like string literals.  :meth:`StaticTier.fetch_basic` stops after the
declared links, like ``wget -p``.
"""
from __future__ import annotations

import logging
import threading
import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
from urllib.robotparser import RobotFileParser

import httpx

from .config import StaticConfig
from .errors import DnsFailure, FetchError, NonHtml, Timeout
from .markup import PageMarkup, extract_speculative, scan_markup
from .records import (
    CONNECTION_ERROR,
    DNS_FAILURE,
    ROBOTS_DISALLOWED,
    STATIC,
    TIMEOUT,
    FetchRecord,
    content_digest,
)
from .uri_norm import NormalizedUri, parse

log = logging.getLogger(__name__)

_DNS_HINTS = (
    "name or service not known",
    "temporary failure in name resolution",
    "nodename nor servname",
    "no address associated",
    "getaddrinfo failed",
    "[errno -2]",
    "[errno -3]",
    "[errno -5]",
)


class Politeness:
    """Per-host minimum delay between request starts and a per-host connection cap."""

    def __init__(self, delay: float = 0.5, connections: int = 2):
        self.delay = delay
        self.connections = connections
        self._lock = threading.Lock()
        self._slots: Dict[str, threading.BoundedSemaphore] = {}
        self._next_start: Dict[str, float] = defaultdict(float)

    def _slot(self, host: str) -> threading.BoundedSemaphore:
        with self._lock:
            sem = self._slots.get(host)
            if sem is None:
                sem = self._slots[host] = threading.BoundedSemaphore(self.connections)
            return sem

    @contextmanager
    def hold(self, host: str):
        sem = self._slot(host)
        with sem:
            with self._lock:
                now = time.monotonic()
                start = max(now, self._next_start[host])
                self._next_start[host] = start + self.delay
            if start > now:
                time.sleep(start - now)
            yield


@dataclass
class Response:
    status: int
    final_uri: NormalizedUri
    headers: httpx.Headers
    body: bytes

    @property
    def content_type(self) -> str:
        return self.headers.get("content-type", "").split(";")[0].strip().lower()

    def text(self) -> str:
        charset = "utf-8"
        for part in self.headers.get("content-type", "").split(";")[1:]:
            k, _, v = part.partition("=")
            if k.strip().lower() == "charset" and v.strip():
                charset = v.strip().strip('"')
        try:
            return self.body.decode(charset, errors="replace")
        except LookupError:
            return self.body.decode("utf-8", errors="replace")


@dataclass
class StaticFetchResult:
    record: FetchRecord
    dom_links: List[NormalizedUri] = field(default_factory=list)
    speculative_links: List[NormalizedUri] = field(default_factory=list)
    dom_snapshot: str = ""
    external_scripts: List[Tuple[NormalizedUri, str]] = field(default_factory=list)
    markup: Optional[PageMarkup] = None
    final_uri: Optional[NormalizedUri] = None


def _is_html(resp: Response) -> bool:
    ctype = resp.content_type
    if ctype:
        return "html" in ctype
    return resp.body.lstrip()[:1] == b"<"


def _union(*lists):
    seen, out = set(), []
    for lst in lists:
        for u in lst:
            if u not in seen:
                seen.add(u)
                out.append(u)
    return out


class StaticTier:
    def __init__(self, config: Optional[StaticConfig] = None, politeness: Optional[Politeness] = None):
        self.config = config or StaticConfig()
        self.politeness = politeness or Politeness(self.config.host_delay, self.config.host_connections)
        self._client = httpx.Client(
            follow_redirects=True,
            max_redirects=self.config.max_redirects,
            timeout=self.config.timeout,
            headers={"User-Agent": self.config.user_agent},
            http2=self.config.http2,
            trust_env=False,
            limits=httpx.Limits(max_connections=64, max_keepalive_connections=32),
        )
        self._robots: Dict[str, Optional[RobotFileParser]] = {}
        self._robots_lock = threading.Lock()

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- transport -----------------------------------------------------------
    def get(self, uri: NormalizedUri) -> Response:
        """GET ``uri`` under politeness; raises Timeout, DnsFailure or FetchError."""
        with self.politeness.hold(uri.authority):
            try:
                with self._client.stream("GET", str(uri)) as r:
                    chunks, size = [], 0
                    for chunk in r.iter_bytes():
                        chunks.append(chunk)
                        size += len(chunk)
                        if size >= self.config.max_bytes:
                            break
                    body = b"".join(chunks)
                    try:
                        final = parse(str(r.url))
                    except ValueError:
                        final = uri
                    return Response(r.status_code, final, r.headers, body)
            except httpx.TimeoutException as exc:
                raise Timeout(f"timed out fetching {uri}", uri) from exc
            except httpx.ConnectError as exc:
                text = str(exc).lower()
                if any(h in text for h in _DNS_HINTS):
                    raise DnsFailure(f"cannot resolve {uri.host}", uri) from exc
                raise FetchError(f"connection failed for {uri}: {exc}", uri) from exc
            except httpx.HTTPError as exc:
                raise FetchError(f"fetch failed for {uri}: {exc}", uri) from exc

    def allowed(self, uri: NormalizedUri) -> bool:
        if not self.config.robots:
            return True
        origin = uri.origin
        with self._robots_lock:
            known = origin in self._robots
            parser = self._robots.get(origin)
        if not known:
            parser = None
            try:
                resp = self.get(parse(origin + "/robots.txt"))
                if resp.status == 200:
                    parser = RobotFileParser()
                    parser.parse(resp.text().splitlines())
            except FetchError:
                parser = None
            with self._robots_lock:
                self._robots[origin] = parser
        return parser is None or parser.can_fetch(self.config.user_agent, str(uri))

    # -- tier operations -------------------------------------------------------
    def _fetch(self, uri: NormalizedUri) -> Tuple[FetchRecord, Optional[Response], float]:
        started = time.monotonic()
        if not self.allowed(uri):
            return FetchRecord(uri, STATIC, ROBOTS_DISALLOWED, None, (), started, time.monotonic()), None, started
        try:
            resp = self.get(uri)
        except Timeout as exc:
            exc.record = FetchRecord(uri, STATIC, TIMEOUT, None, (), started, time.monotonic())
            raise
        except DnsFailure as exc:
            exc.record = FetchRecord(uri, STATIC, DNS_FAILURE, None, (), started, time.monotonic())
            raise
        except FetchError as exc:
            exc.record = FetchRecord(uri, STATIC, CONNECTION_ERROR, None, (), started, time.monotonic())
            raise
        record = FetchRecord(
            uri,
            STATIC,
            resp.status,
            content_digest(resp.body, self.config.digest),
            (),
            started,
            time.monotonic(),
            len(resp.body),
        )
        return record, resp, started

    def dereference(self, uri: NormalizedUri) -> FetchRecord:
        """Fetch and digest without link extraction; failures become status markers."""
        try:
            record, _, _ = self._fetch(uri)
        except FetchError as exc:
            return exc.record
        return record

    def fetch_page(self, uri: NormalizedUri, speculative: bool = True) -> StaticFetchResult:
        """Fetch and extract; ``speculative=False`` stops at the declared links."""
        record, resp, started = self._fetch(uri)
        if resp is None or not (200 <= resp.status < 300):
            # robots-blocked or HTTP error: status and digest only
            return StaticFetchResult(record=record, final_uri=resp.final_uri if resp else uri)
        if not _is_html(resp):
            err = NonHtml(f"{uri} is {resp.content_type or 'untyped'}, not HTML", uri)
            err.record = record
            raise err
        text = resp.text()
        page = scan_markup(text, resp.final_uri)
        dom_links = [u for u in page.dom_links if u != uri]
        spec_links: List[NormalizedUri] = []
        scripts: List[Tuple[NormalizedUri, str]] = []
        if speculative:
            for body in page.inline_scripts:
                spec_links.extend(extract_speculative(body, page.base))
            for src in page.script_srcs:
                try:
                    sresp = self.get(src)
                except FetchError:
                    continue
                if 200 <= sresp.status < 300:
                    stext = sresp.text()
                    scripts.append((src, stext))
                    spec_links.extend(extract_speculative(stext, page.base))
            spec_links = [u for u in _union(spec_links) if u != uri]
        discovered = _union(dom_links, spec_links)
        record = FetchRecord(
            uri, STATIC, record.status, record.digest, tuple(discovered),
            started, time.monotonic(), record.bytes,
        )
        return StaticFetchResult(record, dom_links, spec_links, text, scripts, page, resp.final_uri)

    def fetch_static(self, uri: NormalizedUri) -> StaticFetchResult:
        """Fetch a page, extract declared links and speculative links from its scripts."""
        return self.fetch_page(uri, speculative=True)

    def fetch_basic(self, uri: NormalizedUri) -> FetchRecord:
        """Fetch a page and its declared links only (the basic-fetch baseline)."""
        return self.fetch_page(uri, speculative=False).record


def fetch_static(uri: NormalizedUri, config: Optional[StaticConfig] = None) -> StaticFetchResult:
    with StaticTier(config) as tier:
        return tier.fetch_static(uri)


def fetch_basic(uri: NormalizedUri, config: Optional[StaticConfig] = None) -> FetchRecord:
    with StaticTier(config) as tier:
        return tier.fetch_basic(uri)

"""The twelve per-page counts used to predict deferred representations.

Features 1-8 come from the markup and script text alone.  Features 9-12 need
a headless capture: requests to the page's own registrable domain or to other
domains, split by whether they succeeded (2xx) or failed (4xx/5xx).
"""
from __future__ import annotations

import re
from dataclasses import astuple, dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..domains import registrable_domain
from ..markup import scan_markup
from ..uri_norm import NormalizedUri, parse

DOM_ONLY = "dom_only"
FULL = "full"
FEATURE_MODES = (DOM_ONLY, FULL)

FEATURE_NAMES = (
    "ads",
    "script_tags",
    "interactive_elements",
    "ajax_in_js",
    "ajax_in_html",
    "dom_modifications",
    "js_navigation",
    "js_storage",
    "found_same_domain",
    "missed_same_domain",
    "found_diff_domain",
    "missed_diff_domain",
)
N_DOM_FEATURES = 8

# An XHR call is usually written as a constructor plus .open(); the larger of
# the two counts is taken so one call is counted once.
_XHR_CTOR = re.compile(r"XMLHttpRequest")
_XHR_OPEN = re.compile(r"\.open\s*\(")
_AJAX_CALLS = re.compile(r"(?<![\w$.])fetch\s*\(|\$\.(?:get|post|ajax)\s*\(")
_DOM_MODS = re.compile(r"appendChild\s*\(|insertBefore\s*\(|replaceChild\s*\(|innerHTML\s*=(?!=)|createElement\s*\(")
_NAVIGATION = re.compile(r"window\.location|location\.href\s*=(?!=)|location\.replace\s*\(|location\.assign\s*\(")
_STORAGE = re.compile(r"document\.cookie|localStorage|sessionStorage")


@dataclass(frozen=True)
class FeatureVector:
    ads: int = 0
    script_tags: int = 0
    interactive_elements: int = 0
    ajax_in_js: int = 0
    ajax_in_html: int = 0
    dom_modifications: int = 0
    js_navigation: int = 0
    js_storage: int = 0
    found_same_domain: int = 0
    missed_same_domain: int = 0
    found_diff_domain: int = 0
    missed_diff_domain: int = 0
    mode: str = FULL

    def __post_init__(self):
        if self.mode not in FEATURE_MODES:
            raise ValueError(f"unknown feature mode {self.mode!r}")
        for value in self.values():
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError("feature counts must be non-negative integers")
        if self.mode == DOM_ONLY and any(self.values()[N_DOM_FEATURES:]):
            raise ValueError("dom_only vectors carry zeros in the capture features")

    def values(self) -> Tuple[int, ...]:
        return astuple(self)[: len(FEATURE_NAMES)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values(), dtype=float)

    def dom_only(self) -> "FeatureVector":
        return FeatureVector(*self.values()[:N_DOM_FEATURES], mode=DOM_ONLY)

    def to_json(self) -> dict:
        out = dict(zip(FEATURE_NAMES, (int(v) for v in self.values())))
        out["mode"] = self.mode
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureVector":
        return cls(*(int(obj.get(n, 0)) for n in FEATURE_NAMES), mode=obj.get("mode", FULL))

    @classmethod
    def from_values(cls, values: Sequence[int], mode: str = FULL) -> "FeatureVector":
        return cls(*(int(v) for v in values), mode=mode)


def ajax_count(text: str) -> int:
    xhr = max(len(_XHR_CTOR.findall(text)), len(_XHR_OPEN.findall(text)))
    return xhr + len(_AJAX_CALLS.findall(text))


def _count(pattern, texts: Iterable[str]) -> int:
    return sum(len(pattern.findall(t)) for t in texts)


def is_ad_host(host: str, ad_domains: Iterable[str]) -> bool:
    host = host.lower()
    reg = registrable_domain(host)
    for d in ad_domains:
        d = d.lower().strip(".")
        if host == d or host.endswith("." + d) or reg == d:
            return True
    return False


def extract_features(
    dom_snapshot,
    external_scripts: Sequence[Tuple[NormalizedUri, str]] = (),
    capture=None,
    page_domain: Optional[str] = None,
    ad_domains: Iterable[str] = (),
    base: Optional[NormalizedUri] = None,
    mode: str = FULL,
) -> FeatureVector:
    """Count the twelve features for one page.

    ``base`` resolves relative references in the markup; it defaults to the
    root of ``page_domain``.  Capture features are filled only in ``full``
    mode and only when a capture is given.
    """
    if mode not in FEATURE_MODES:
        raise ValueError(f"unknown feature mode {mode!r}")
    if base is None:
        base = parse(f"http://{page_domain or 'localhost'}/")
    page = scan_markup(dom_snapshot, base)
    ad_domains = list(ad_domains)
    inline = page.inline_scripts
    external = [text for _, text in external_scripts]
    every = inline + external

    link_uris = list(dict.fromkeys(page.requisites + page.anchors))
    counts = [
        sum(1 for u in link_uris if is_ad_host(u.host, ad_domains)) if ad_domains else 0,
        page.script_tags,
        page.interactive_elements,
        sum(ajax_count(t) for t in external),
        sum(ajax_count(t) for t in inline),
        _count(_DOM_MODS, every),
        _count(_NAVIGATION, every),
        _count(_STORAGE, every),
    ]
    capture_counts = [0, 0, 0, 0]
    if mode == FULL and capture is not None:
        domain = page_domain or registrable_domain(capture.record.uri.host)
        for req in capture.requests:
            if not isinstance(req.status, int):
                continue
            same = registrable_domain(req.uri.host) == domain
            if 200 <= req.status < 300:
                capture_counts[0 if same else 2] += 1
            elif 400 <= req.status < 600:
                capture_counts[1 if same else 3] += 1
    return FeatureVector(*counts, *capture_counts, mode=mode)

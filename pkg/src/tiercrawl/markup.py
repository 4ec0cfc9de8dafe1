"""Markup scanning: declared links, scripts, event handlers, and speculative
URI extraction from JavaScript source."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import List, Optional

from .errors import MalformedUri, UnparseableMarkup
from .uri_norm import NormalizedUri, resolve

# (tag, attribute) pairs whose value is an embedded resource the page loads.
REQUISITE_ATTRS = {
    ("img", "src"),
    ("script", "src"),
    ("iframe", "src"),
    ("frame", "src"),
    ("embed", "src"),
    ("object", "data"),
    ("source", "src"),
    ("video", "src"),
    ("video", "poster"),
    ("audio", "src"),
    ("track", "src"),
    ("input", "src"),
    ("body", "background"),
    ("table", "background"),
    ("td", "background"),
}
SRCSET_TAGS = {"img", "source"}
ANCHOR_ATTRS = {("a", "href"), ("area", "href")}
# <link rel=...> values a browser dereferences while loading the page.
LINK_RELS = {"stylesheet", "icon", "shortcut", "preload", "prefetch", "modulepreload", "manifest", "apple-touch-icon"}

JS_TYPES = {
    "",
    "text/javascript",
    "application/javascript",
    "module",
    "text/ecmascript",
    "application/ecmascript",
    "application/x-javascript",
}

_CSS_URL_RE = re.compile(r"""url\(\s*(?:"([^"]*)"|'([^']*)'|([^)'"\s]*))\s*\)""", re.I)
_CSS_IMPORT_RE = re.compile(r"""@import\s+(?:"([^"]+)"|'([^']+)')""", re.I)
_SKIP_SCHEMES = ("javascript:", "data:", "mailto:", "tel:", "about:", "blob:", "#")

SPECULATIVE_EXTENSIONS = (
    "js", "css", "png", "jpg", "jpeg", "gif", "svg", "ico", "json",
    "html", "htm", "woff", "woff2", "mp4", "webm",
)
# A quoted literal (single, double or backtick quotes, simple escapes allowed).
_LITERAL_RE = re.compile(r"""(['"`])((?:\\.|(?!\1)[^\\\n])*)\1""")
_ABSOLUTE_RE = re.compile(r"^https?://[^\s'\"<>`]+$", re.I)
_SCHEME_RELATIVE_RE = re.compile(r"^//[A-Za-z0-9.\-]+(?::\d+)?(?:/[^\s'\"<>`]*)?$")
_ROOT_RELATIVE_RE = re.compile(
    r"^/(?!/)[^\s'\"<>`?#]*\.(?:%s)(?:\?[^\s'\"<>`]*)?$" % "|".join(SPECULATIVE_EXTENSIONS),
    re.I,
)


def css_urls(text: str) -> List[str]:
    """Raw references from ``url(...)`` and ``@import`` in CSS text."""
    refs = [a or b or c for a, b, c in _CSS_URL_RE.findall(text)]
    refs += [a or b for a, b in _CSS_IMPORT_RE.findall(text)]
    return [r for r in refs if r]


def _srcset_urls(value: str) -> List[str]:
    out = []
    for candidate in value.split(","):
        parts = candidate.strip().split()
        if parts:
            out.append(parts[0])
    return out


def _skippable(ref: str) -> bool:
    return not ref.strip() or ref.strip().lower().startswith(_SKIP_SCHEMES)


@dataclass
class PageMarkup:
    """What a non-executing parser can see in one page."""

    base: NormalizedUri
    requisites: List[NormalizedUri] = field(default_factory=list)
    anchors: List[NormalizedUri] = field(default_factory=list)
    script_srcs: List[NormalizedUri] = field(default_factory=list)
    inline_scripts: List[str] = field(default_factory=list)
    script_tags: int = 0
    interactive_elements: int = 0
    element_count: int = 0

    @property
    def dom_links(self) -> List[NormalizedUri]:
        return _unique(self.requisites + self.anchors)


def _unique(uris):
    seen, out = set(), []
    for u in uris:
        if u not in seen:
            seen.add(u)
            out.append(u)
    return out


class _Scanner(HTMLParser):
    def __init__(self, page: PageMarkup):
        super().__init__(convert_charrefs=True)
        self.page = page
        self._raw_requisites: List[str] = []
        self._raw_anchors: List[str] = []
        self._raw_scripts: List[str] = []
        self._in_script: Optional[bool] = None  # True when the open script is JavaScript
        self._script_buf: List[str] = []
        self._in_style = False
        self._style_buf: List[str] = []
        self._base_href: Optional[str] = None

    def handle_starttag(self, tag, attrs):
        self._element(tag, attrs)

    def handle_startendtag(self, tag, attrs):
        self._element(tag, attrs)
        if tag == "script":
            self._close_script()

    def _element(self, tag, attrs):
        page = self.page
        page.element_count += 1
        amap = {}
        for name, value in attrs:
            amap.setdefault(name.lower(), value if value is not None else "")
        if any(name.startswith("on") for name in amap):
            page.interactive_elements += 1
        if tag == "base" and "href" in amap and self._base_href is None:
            self._base_href = amap["href"]
        for name, value in amap.items():
            if (tag, name) in REQUISITE_ATTRS and tag != "script":
                self._raw_requisites.append(value)
            elif (tag, name) in ANCHOR_ATTRS:
                self._raw_anchors.append(value)
            elif name == "srcset" and tag in SRCSET_TAGS:
                self._raw_requisites.extend(_srcset_urls(value))
            elif name == "style":
                self._raw_requisites.extend(css_urls(value))
        if tag == "link" and "href" in amap:
            rels = set(amap.get("rel", "").lower().split())
            if rels & LINK_RELS:
                self._raw_requisites.append(amap["href"])
        elif tag == "script":
            is_js = amap.get("type", "").strip().lower() in JS_TYPES
            if is_js:
                page.script_tags += 1
                if amap.get("src", "").strip():
                    self._raw_scripts.append(amap["src"])
                    self._raw_requisites.append(amap["src"])
            # a script with src ignores its body
            self._in_script = is_js and not amap.get("src", "").strip()
            self._script_buf = []
        elif tag == "style":
            self._in_style = True
            self._style_buf = []

    def handle_endtag(self, tag):
        if tag == "script":
            self._close_script()
        elif tag == "style" and self._in_style:
            self._raw_requisites.extend(css_urls("".join(self._style_buf)))
            self._in_style = False

    def _close_script(self):
        if self._in_script:
            body = "".join(self._script_buf)
            if body.strip():
                self.page.inline_scripts.append(body)
        self._in_script = None
        self._script_buf = []

    def handle_data(self, data):
        if self._in_script is not None:
            self._script_buf.append(data)
        elif self._in_style:
            self._style_buf.append(data)

    def finish(self):
        self.close()
        if self._in_script is not None:
            self._close_script()
        page = self.page
        if self._base_href and not _skippable(self._base_href):
            try:
                page.base = resolve(page.base, self._base_href)
            except MalformedUri:
                pass
        page.requisites = _resolve_all(page.base, self._raw_requisites)
        page.anchors = _resolve_all(page.base, self._raw_anchors)
        page.script_srcs = _resolve_all(page.base, self._raw_scripts)


def _resolve_all(base: NormalizedUri, refs) -> List[NormalizedUri]:
    out = []
    for ref in refs:
        if _skippable(ref):
            continue
        try:
            uri = resolve(base, ref)
        except MalformedUri:
            continue
        if uri.scheme in ("http", "https"):
            out.append(uri)
    return _unique(out)


def scan_markup(markup, base: NormalizedUri) -> PageMarkup:
    """Parse ``markup`` (str or bytes) and collect everything a static crawler sees."""
    if isinstance(markup, (bytes, bytearray)):
        markup = bytes(markup).decode("utf-8", errors="replace")
    if not isinstance(markup, str):
        raise UnparseableMarkup(f"cannot parse markup of type {type(markup).__name__}")
    page = PageMarkup(base=base)
    scanner = _Scanner(page)
    try:
        scanner.feed(markup)
        scanner.finish()
    except (AssertionError, ValueError) as exc:
        raise UnparseableMarkup(str(exc)) from exc
    return page


def _unescape_js(text: str) -> str:
    return text.replace("\\/", "/")


def _follows_plus(text: str, pos: int) -> bool:
    i = pos - 1
    while i >= 0 and text[i].isspace():
        i -= 1
    return i >= 0 and text[i] == "+" and (i == 0 or text[i - 1] != "+")


def extract_speculative(script_source: str, base: NormalizedUri) -> List[NormalizedUri]:
    """URIs mentioned as whole string literals in JavaScript source.

    Recognized literals are absolute ``http(s)://`` URIs, scheme-relative
    ``//host/...`` references and root-relative paths ending in a known file
    extension.  A literal that is the right-hand operand of ``+`` is a
    fragment of a runtime-built string and is ignored.
    """
    found = []
    for m in _LITERAL_RE.finditer(script_source or ""):
        quote, body = m.group(1), _unescape_js(m.group(2))
        if quote == "`" and "${" in body:
            continue
        if _follows_plus(script_source, m.start()):
            continue
        if _ABSOLUTE_RE.match(body) or _SCHEME_RELATIVE_RE.match(body) or _ROOT_RELATIVE_RE.match(body):
            try:
                uri = resolve(base, body)
            except MalformedUri:
                continue
            found.append(uri)
    return _unique(found)

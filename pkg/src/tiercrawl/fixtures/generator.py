"""Deterministic generation of fixture pages and their ground-truth manifest.

Every page is written under ``pages/``; iframe documents under ``frames/``;
external scripts under ``js/``; the shared ad loader under ``ads/``.  Markup
refers to other origins through placeholder tokens that the fixture server
substitutes when serving:

``__SELF__``  the primary origin the pages are served from
``__ALT__``   a second hostname on the same server (a different domain)
``__AD__``    a third hostname standing in for an ad network

Resource URIs injected by script are always assembled from several string
pieces at run time, so no single literal in the source names them.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional

from ..errors import IoFailure

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

KINDS = (
    "static",
    "script_injected",
    "iframe_nested",
    "delayed_load",
    "infinite_poller",
    "speculative_only",
)
DEFERRED = "Deferred"
NON_DEFERRED = "NonDeferred"

SELF, ALT, AD = "__SELF__", "__ALT__", "__AD__"
AD_LOADER = AD + "/ads/show_ads.js"
POLL_INTERVAL_MS = 500

_IMAGE_EXTS = ("png", "jpg", "gif", "svg")
_WORDS = (
    "archive memento crawler frontier harvest replay capture snapshot seed resource "
    "embedded deferred representation client server request response header entity"
).split()


@dataclass
class FixturePage:
    path: str
    kind: str
    declared_resources: List[str] = field(default_factory=list)
    injected_resources: List[str] = field(default_factory=list)
    speculative_resources: List[str] = field(default_factory=list)
    injection_delay: int = 0
    label: str = NON_DEFERRED

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fixture kind {self.kind!r}")
        if self.kind == "static" and self.injected_resources:
            raise ValueError("static pages cannot inject resources")

    @property
    def deferred(self) -> bool:
        return self.label == DEFERRED


@dataclass
class Manifest:
    pages: List[FixturePage]
    seed: int = 0
    counts: Dict[str, int] = field(default_factory=dict)
    version: int = MANIFEST_VERSION

    def page(self, path: str) -> FixturePage:
        for p in self.pages:
            if p.path == path:
                return p
        raise KeyError(path)

    def by_path(self) -> Dict[str, FixturePage]:
        return {p.path: p for p in self.pages}

    def label_counts(self) -> Dict[str, int]:
        out = {DEFERRED: 0, NON_DEFERRED: 0}
        for p in self.pages:
            out[p.label] += 1
        return out

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "counts": dict(sorted(self.counts.items())),
            "pages": [asdict(p) for p in self.pages],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Manifest":
        if obj.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {obj.get('version')}")
        return cls(
            pages=[FixturePage(**p) for p in obj["pages"]],
            seed=obj.get("seed", 0),
            counts=obj.get("counts", {}),
        )

    @classmethod
    def load(cls, corpus_dir) -> "Manifest":
        with open(os.path.join(corpus_dir, MANIFEST_NAME), encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass
class CorpusSpec:
    """How many pages of each kind to generate, and the injection delay.

    ``delay_ms`` fixes the post-load delay for delayed_load and iframe_nested
    pages; when None each page draws a delay from ``delay_range_ms``.
    """

    counts: Mapping[str, int]
    delay_ms: Optional[int] = None
    delay_range_ms: tuple = (100, 400)
    noise: float = 0.35
    images: tuple = (1, 6)
    extras: bool = True  # stylesheets and CSS backgrounds besides the images

    def __post_init__(self):
        for kind, n in self.counts.items():
            if kind not in KINDS:
                raise ValueError(f"unknown fixture kind {kind!r}")
            if n < 0:
                raise ValueError(f"negative count for {kind}")


class _PageBuilder:
    """Accumulates markup, scripts and manifest entries for one page."""

    def __init__(self, rng: random.Random, name: str, kind: str):
        self.rng = rng
        self.name = name
        self.kind = kind
        self.head: List[str] = []
        self.body: List[str] = []
        self.tail: List[str] = []
        self.external_js: Optional[str] = None
        self.frame_doc: Optional[str] = None
        self.page = FixturePage(path=f"/pages/{name}.html", kind=kind)

    # -- declared ------------------------------------------------------------
    def _resource_ref(self, stem: str, ext: str, origin: str, missing: bool) -> str:
        folder = "missing" if missing else "r"
        return f"{origin}/{folder}/{self.name}-{stem}.{ext}"

    def _markup_ref(self, ref: str) -> str:
        # same-origin references appear root-relative in markup
        return ref[len(SELF):] if ref.startswith(SELF) else ref

    def declare_images(self, n: int, p_cross: float = 0.25, p_missing: float = 0.1):
        for i in range(n):
            origin = ALT if self.rng.random() < p_cross else SELF
            missing = self.rng.random() < p_missing
            ref = self._resource_ref(f"img{i}", self.rng.choice(_IMAGE_EXTS), origin, missing)
            self.page.declared_resources.append(ref)
            self.body.append(f'<img src="{self._markup_ref(ref)}" alt="figure {i}" width="40" height="30">')

    def declare_stylesheet(self):
        ref = self._resource_ref("style", "css", SELF, False)
        self.page.declared_resources.append(ref)
        self.head.append(f'<link rel="stylesheet" href="{self._markup_ref(ref)}">')

    def declare_background(self):
        ref = self._resource_ref("bg", "png", SELF, False)
        self.page.declared_resources.append(ref)
        self.body.append(
            f'<div class="banner" style="width:50px;height:20px;background-image:url(\'{self._markup_ref(ref)}\')"></div>'
        )

    def declare_external_script(self, code: str):
        ref = f"{SELF}/js/{self.name}.js"
        self.page.declared_resources.append(ref)
        self.external_js = code
        self.tail.append(f'<script src="{self._markup_ref(ref)}"></script>')

    def declare_ad_loader(self):
        if AD_LOADER not in self.page.declared_resources:
            self.page.declared_resources.append(AD_LOADER)
        slot = f"{self.name}-{len(self.page.injected_resources)}"
        self.page.injected_resources.append(f"{AD}/r/ad-{slot}.gif")
        self.body.append(f'<div class="ad" id="slot-{slot}"></div>')
        self.tail.append(f'<script src="{AD_LOADER}" data-slot="{slot}"></script>')

    def declare_iframe(self, ref_origin: str):
        ref = f"{ref_origin}/frames/{self.name}.html"
        self.page.declared_resources.append(ref)
        self.body.append(f'<iframe src="{self._markup_ref(ref)}" width="300" height="120" frameborder="0"></iframe>')
        return ref

    # -- injected ------------------------------------------------------------
    def injected_ref(self, stem: str, ext: str, p_cross: float = 0.3, p_missing: float = 0.1, origin=None):
        origin = origin or (ALT if self.rng.random() < p_cross else SELF)
        missing = self.rng.random() < p_missing
        ref = self._resource_ref(stem, ext, origin, missing)
        self.page.injected_resources.append(ref)
        return ref

    def inline(self, code: str, where: str = "tail"):
        block = f"<script>\n{code}\n</script>"
        (self.tail if where == "tail" else self.head).append(block)

    def render(self) -> str:
        words = " ".join(self.rng.choice(_WORDS) for _ in range(self.rng.randint(12, 40)))
        return (
            "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<link rel=\"icon\" href=\"data:,\">\n"
            f"<title>Fixture {self.name} ({self.kind})</title>\n"
            + "\n".join(self.head)
            + "\n</head>\n<body>\n"
            + f"<h1>{self.name}</h1>\n<p>{words}</p>\n"
            + "\n".join(self.body)
            + "\n"
            + "\n".join(self.tail)
            + "\n</body>\n</html>\n"
        )


def _split_expr(ref: str, doc_origin: str = SELF) -> str:
    """A JavaScript expression assembling ``ref`` from pieces at run time.

    References on the executing document's own origin stay root-relative.
    """
    origin, _, rest = ref.partition("/")
    folder, _, leaf = rest.partition("/")
    stem, _, ext = leaf.rpartition(".")
    head = "''" if origin == doc_origin else f"'{origin}'"
    return f"{head} + '/{folder}/' + '{stem}' + '.{ext}'"


def _injector(ref: str, style: str, var: str, doc_origin: str = SELF) -> str:
    expr = _split_expr(ref, doc_origin)
    if style == "img":
        return (
            f"  var {var} = document.createElement('img');\n"
            f"  {var}.src = {expr};\n"
            f"  document.body.appendChild({var});"
        )
    if style == "script":
        return (
            f"  var {var} = document.createElement('script');\n"
            f"  {var}.src = {expr};\n"
            f"  document.head.appendChild({var});"
        )
    if style == "xhr":
        return (
            f"  var {var} = new XMLHttpRequest();\n"
            f"  {var}.open('GET', {expr});\n"
            f"  {var}.send();"
        )
    return f"  fetch({expr}).catch(function () {{}});"


_EXT_FOR_STYLE = {"img": ("png", "gif", "jpg"), "script": ("js",), "xhr": ("json",), "fetch": ("json",)}


def _noise_script(rng: random.Random) -> str:
    """Script activity that never issues a network request."""
    parts = []
    if rng.random() < 0.5:
        parts.append("var visits = parseInt(localStorage.getItem('visits') || '0', 10) + 1;\nlocalStorage.setItem('visits', String(visits));")
    if rng.random() < 0.4:
        parts.append("var prefs = document.cookie.indexOf('theme=') >= 0;")
    if rng.random() < 0.35:
        parts.append("if (window.location.hash === '#print') { document.title = document.title + ' (print)'; }")
    if rng.random() < 0.4:
        parts.append(
            "var note = document.createElement('span');\n"
            "note.textContent = 'updated';\n"
            "document.body.appendChild(note);"
        )
    if rng.random() < 0.15:
        parts.append("function refresh() { var r = new XMLHttpRequest(); r.open('GET', location.pathname); r.send(); }")
    if not parts:
        parts.append("var started = Date.now();")
    return "\n".join(parts)


def _add_noise(b: _PageBuilder, rng: random.Random, noise: float):
    if rng.random() < noise:
        b.inline(_noise_script(rng), where=rng.choice(["head", "tail"]))
    if rng.random() < noise:
        b.body.append('<button type="button" onclick="this.blur()">Share</button>')


def _build_page(rng: random.Random, name: str, kind: str, spec: CorpusSpec) -> _PageBuilder:
    b = _PageBuilder(rng, name, kind)
    if spec.extras and rng.random() < 0.4:
        b.declare_stylesheet()
    b.declare_images(rng.randint(*spec.images))
    if spec.extras and rng.random() < 0.25:
        b.declare_background()

    def delay():
        if spec.delay_ms is not None:
            return spec.delay_ms
        return rng.randint(*spec.delay_range_ms)

    if kind == "static":
        _add_noise(b, rng, spec.noise)

    elif kind == "speculative_only":
        refs = []
        for i in range(rng.randint(1, 3)):
            origin = ALT if rng.random() < 0.5 else SELF
            ref = f"{origin}/r/{name}-spec{i}.{rng.choice(('png', 'js', 'json'))}"
            refs.append(ref)
        b.page.speculative_resources = refs
        literals = ", ".join(f"'{b._markup_ref(r)}'" for r in refs)
        b.inline(
            "function preloadLater() {\n"
            f"  var assets = [{literals}];\n"
            "  assets.forEach(function (u) { var i = new Image(); i.src = u; });\n"
            "}"
        )
        _add_noise(b, rng, spec.noise)

    elif kind == "script_injected":
        n = rng.randint(1, 4)
        lines = []
        for i in range(n):
            style = rng.choice(list(_EXT_FOR_STYLE))
            ref = b.injected_ref(f"inj{i}", rng.choice(_EXT_FOR_STYLE[style]))
            lines.append(_injector(ref, style, f"el{i}"))
        code = "(function () {\n" + "\n".join(lines) + "\n})();"
        placement = rng.random()
        if placement < 0.45:
            b.declare_external_script(code)
        elif placement < 0.55:
            # the ad loader alone injects; no other client code on the page
            b.page.injected_resources.clear()
            b.declare_ad_loader()
        else:
            b.inline(code)
        if rng.random() < 0.2 and placement < 0.45:
            b.declare_ad_loader()
        if rng.random() < spec.noise:
            b.body.append('<a class="more" href="#" onclick="return false">more</a>')

    elif kind == "delayed_load":
        d = delay()
        b.page.injection_delay = d
        lines = []
        for i in range(rng.randint(1, 3)):
            style = rng.choice(["img", "fetch", "xhr"])
            ref = b.injected_ref(f"late{i}", rng.choice(_EXT_FOR_STYLE[style]))
            lines.append("  " + _injector(ref, style, f"el{i}").replace("\n", "\n  "))
        code = (
            "window.addEventListener('load', function () {\n"
            f"  setTimeout(function () {{\n" + "\n".join(lines) + f"\n  }}, {d});\n"
            "});"
        )
        if rng.random() < 0.4:
            b.declare_external_script(code)
        else:
            b.inline(code)

    elif kind == "iframe_nested":
        d = delay()
        b.page.injection_delay = d
        frame_ref = b.declare_iframe(ALT if rng.random() < 0.5 else SELF)
        frame_origin = frame_ref.split("/")[0]
        lines = []
        for i in range(rng.randint(1, 2)):
            ref = b.injected_ref(f"frame{i}", rng.choice(("png", "jpg")), origin=frame_origin if rng.random() < 0.7 else None)
            lines.append("    " + _injector(ref, "img", f"el{i}", frame_origin).replace("\n", "\n  "))
        b.frame_doc = (
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>widget</title></head>\n"
            "<body><div id=\"profile\">profile</div>\n<script>\n"
            "window.addEventListener('load', function () {\n"
            "  setTimeout(function () {\n" + "\n".join(lines) + f"\n  }}, {d});\n"
            "});\n</script>\n</body></html>\n"
        )
        _add_noise(b, rng, spec.noise)

    elif kind == "infinite_poller":
        ref = f"{SELF}/r/{name}-poll.json"
        b.page.injected_resources.append(ref)
        b.inline(
            "var polls = 0;\n"
            "setInterval(function () {\n"
            "  polls += 1;\n"
            f"  fetch({_split_expr(ref)}, {{cache: 'no-store'}}).catch(function () {{}});\n"
            f"}}, {POLL_INTERVAL_MS});"
        )

    b.page.label = DEFERRED if b.page.injected_resources else NON_DEFERRED
    return b


AD_LOADER_SOURCE = """\
(function () {
  var me = document.currentScript;
  var origin = me.src.split('/ads/')[0];
  var slot = me.getAttribute('data-slot');
  var ad = document.createElement('img');
  ad.src = origin + '/r/' + 'ad-' + slot + '.gif';
  var box = document.getElementById('slot-' + slot) || document.body;
  box.appendChild(ad);
})();
"""


def _write(path: str, text: str):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def generate_corpus(spec, seed: int, out_dir) -> Manifest:
    """Write a fixture corpus to ``out_dir`` and return its manifest.

    ``spec`` is a :class:`CorpusSpec` or a plain ``{kind: count}`` mapping.
    Output is a deterministic function of ``spec`` and ``seed``.
    """
    if not isinstance(spec, CorpusSpec):
        spec = CorpusSpec(dict(spec))
    rng = random.Random(seed)
    plan = [kind for kind in KINDS for _ in range(spec.counts.get(kind, 0))]
    rng.shuffle(plan)
    pages = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for i, kind in enumerate(plan):
            name = f"p{i:04d}"
            b = _build_page(rng, name, kind, spec)
            _write(os.path.join(out_dir, "pages", f"{name}.html"), b.render())
            if b.external_js is not None:
                _write(os.path.join(out_dir, "js", f"{name}.js"), b.external_js + "\n")
            if b.frame_doc is not None:
                _write(os.path.join(out_dir, "frames", f"{name}.html"), b.frame_doc)
            pages.append(b.page)
        _write(os.path.join(out_dir, "ads", "show_ads.js"), AD_LOADER_SOURCE)
        manifest = Manifest(pages=pages, seed=seed, counts={k: v for k, v in spec.counts.items() if v})
        _write(
            os.path.join(out_dir, MANIFEST_NAME),
            json.dumps(manifest.to_json(), indent=1, sort_keys=True) + "\n",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write corpus to {out_dir}: {exc}") from exc
    return manifest

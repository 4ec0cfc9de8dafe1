"""Watching a page in a headless browser.

Captures one script-injected page and one page whose iframe loads a resource
one second after the load event.  The late resource is caught only when the
capture waits for the network to go quiet, not when it stops at the load event.
Needs a Chromium-family browser (see README).
"""
import sys
import tempfile

from tiercrawl.config import HeadlessConfig
from tiercrawl.fixtures import CorpusSpec, generate_corpus, serve
from tiercrawl.headless import HeadlessTier, browser_available
from tiercrawl.uri_norm import parse

if not browser_available():
    sys.exit("no headless browser found; set TIERCRAWL_BROWSER to a Chromium binary")

with tempfile.TemporaryDirectory() as corpus:
    manifest = generate_corpus(CorpusSpec({"script_injected": 1, "iframe_nested": 1}, delay_ms=1000),
                               seed=3, out_dir=corpus)
    with serve(corpus) as server:
        for page in manifest.pages:
            uri = parse(server.url(page.path))
            injected = {server.expand(r) for r in page.injected_resources}
            print(f"\n{page.kind} page {page.path}: {len(injected)} injected resources")
            for label, cfg in (("network idle", HeadlessConfig(idle_window=2.0, max_wait=15.0)),
                               ("load event", HeadlessConfig(paper_parity_load_event=True))):
                with HeadlessTier(cfg) as tier:
                    cap = tier.fetch(uri)
                found = {str(u) for u in cap.record.discovered}
                print(f"  stop at {label:<13} outcome={cap.load_outcome:<16} requests={len(cap.requests):3d}"
                      f"  injected captured {len(injected & found)}/{len(injected)}")

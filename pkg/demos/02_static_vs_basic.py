"""What a crawler finds without running JavaScript.

A small fixture corpus is served on loopback.  For each page kind we compare
the ground-truth manifest with what basic fetch (declared links only) and the
static tier (declared links plus URI literals found in script text) discover.
"""
import tempfile
from collections import defaultdict

from tiercrawl.config import StaticConfig
from tiercrawl.fixtures import generate_corpus, serve
from tiercrawl.static_tier import StaticTier
from tiercrawl.uri_norm import parse

MIX = {"static": 4, "speculative_only": 4, "script_injected": 4, "iframe_nested": 4}

with tempfile.TemporaryDirectory() as corpus:
    manifest = generate_corpus(MIX, seed=1, out_dir=corpus)
    rows = defaultdict(lambda: [0, 0, 0, 0, 0])
    with serve(corpus) as server, StaticTier(StaticConfig(robots=False, host_delay=0.0)) as tier:
        print("serving", len(manifest.pages), "pages at", server.origin)
        for page in manifest.pages:
            uri = parse(server.url(page.path))
            basic = {str(u) for u in tier.fetch_basic(uri).discovered}
            static = {str(u) for u in tier.fetch_static(uri).record.discovered}
            declared = {server.expand(r) for r in page.declared_resources}
            hidden = {server.expand(r) for r in page.speculative_resources} - declared
            injected = {server.expand(r) for r in page.injected_resources} - declared - hidden
            row = rows[page.kind]
            row[0] += len(basic)
            row[1] += len(static)
            row[2] += len(hidden & static) - len(hidden & basic)
            row[3] += len(injected)
            row[4] += len(injected & static)

print(f"\n{'kind':<18} {'basic':>6} {'static':>7} {'script literals':>16} {'injected':>9} {'static saw':>11}")
for kind, (b, s, lit, inj, seen) in rows.items():
    print(f"{kind:<18} {b:6d} {s:7d} {lit:16d} {inj:9d} {seen:11d}")
print("\nScript-text literals are recovered only by the static tier.  URIs that scripts")
print("assemble at run time stay invisible to both, which is why a browser tier is needed.")

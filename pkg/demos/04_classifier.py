"""Predicting deferred pages from markup alone.

Crawls a generated corpus with the static tier, labels each page from the
fixture manifest, then cross-validates the tree ensemble on DOM-only features
and shows what a trained model says about a few pages.
"""
import tempfile
from collections import Counter

from tiercrawl.classifier import DEFERRED, FEATURE_NAMES, cross_validate, predict, train
from tiercrawl.config import ClassifierConfig, CrawlConfig, StaticConfig
from tiercrawl.fixtures import generate_corpus, serve
from tiercrawl.orchestrator import label_corpus, run_crawl
from tiercrawl.uri_norm import parse

MIX = {"static": 40, "speculative_only": 20, "script_injected": 50,
       "iframe_nested": 15, "delayed_load": 20, "infinite_poller": 5}

with tempfile.TemporaryDirectory() as corpus:
    manifest = generate_corpus(MIX, seed=11, out_dir=corpus)
    out = f"{corpus}/crawl"
    cfg = CrawlConfig(mode="static_only", output=out, max_depth=1,
                      static=StaticConfig(robots=False, host_delay=0.0),
                      classifier=ClassifierConfig(ad_domains=["127.0.0.3"]))
    with serve(corpus) as server:
        run_crawl(cfg, [parse(server.url(p.path)) for p in manifest.pages])
    examples = label_corpus(out, manifest)

print("labels:", dict(Counter(ex.label for ex in examples)))
cv = cross_validate(examples, folds=10, seed=0)
agg = cv.aggregate
print(f"10-fold accuracy {agg.accuracy:.3f}, deferred F-measure {agg.per_class[DEFERRED].f_measure:.3f}")
print("summed confusion matrix:", agg.matrix)

model = train(examples, seed=0)
print("\nfeature vector and prediction for three pages")
for ex in examples[:3]:
    label, conf = predict(model, ex.features)
    nonzero = {n: v for n, v in zip(FEATURE_NAMES, ex.features.values()) if v}
    print(f"  truth={ex.label:<13} predicted={label:<13} votes={conf:.2f}  {nonzero}")

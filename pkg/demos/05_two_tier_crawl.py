"""Trading coverage for speed with a two-tier crawl.

Runs the same seeds through the static tier, the headless tier, both tiers
for every page, and both tiers gated by the classifier, then prints the
frontier size and throughput of each crawl.  Needs a browser (see README).
"""
import os
import sys
import tempfile

from tiercrawl.classifier import train
from tiercrawl.config import ClassifierConfig, CrawlConfig, HeadlessConfig, StaticConfig
from tiercrawl.fixtures import generate_corpus, serve
from tiercrawl.headless import HeadlessTier, browser_available
from tiercrawl.orchestrator import compare_outputs, label_corpus, run_crawl
from tiercrawl.uri_norm import parse

if not browser_available():
    sys.exit("no headless browser found; set TIERCRAWL_BROWSER to a Chromium binary")

MIX = {"static": 10, "speculative_only": 5, "script_injected": 10, "iframe_nested": 5, "delayed_load": 5}
STATIC = StaticConfig(robots=False, host_delay=0.0)
HEADLESS = HeadlessConfig(idle_window=1.0, max_wait=6.0)


def config(out, mode, model=None):
    return CrawlConfig(mode=mode, output=out, static=STATIC, headless=HEADLESS,
                       classifier=ClassifierConfig(model=model, ad_domains=["127.0.0.3"]))


with tempfile.TemporaryDirectory() as work:
    # a separate corpus to train the classifier on
    train_dir = os.path.join(work, "train")
    train_manifest = generate_corpus({**MIX, "static": 30, "script_injected": 30}, seed=1, out_dir=train_dir)
    with serve(train_dir) as server:
        run_crawl(config(f"{train_dir}/crawl", "static_only"), [parse(server.url(p.path)) for p in train_manifest.pages])
    model_path = os.path.join(work, "model.json")
    train(label_corpus(f"{train_dir}/crawl", train_manifest), seed=0).save(model_path)

    crawl_dir = os.path.join(work, "corpus")
    manifest = generate_corpus(MIX, seed=2, out_dir=crawl_dir)
    outs = []
    with serve(crawl_dir) as server, HeadlessTier(HEADLESS) as tier:
        seeds = [parse(server.url(p.path)) for p in manifest.pages]
        for mode in ("static_only", "headless_only", "naive_two_tier", "classified_two_tier"):
            out = os.path.join(work, mode)
            report = run_crawl(config(out, mode, model_path), seeds, headless_tier=tier)
            print(f"{mode:<20} done in {report.elapsed:5.1f}s, headless captures {report.headless_invocations}")
            outs.append(out)
    print()
    print(compare_outputs(outs).table())

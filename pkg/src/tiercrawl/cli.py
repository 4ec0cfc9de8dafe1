"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 environment error (browser or
network unavailable), 4 crawl finished with page-level failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from typing import List, Optional

from .config import MODES, CrawlConfig, load_config
from .errors import (
    BrowserUnavailable,
    ConfigError,
    CrawlError,
    IoFailure,
    ManifestMiss,
    PortInUse,
)

EXIT_OK, EXIT_CONFIG, EXIT_ENV, EXIT_FAILURES = 0, 2, 3, 4


def _emit(obj, as_json: bool, table: Optional[str] = None):
    if as_json or table is None:
        print(json.dumps(obj, indent=1, sort_keys=True))
    else:
        print(table, end="")


def _config(args) -> CrawlConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else CrawlConfig()
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "seeds", None):
        cfg.seeds = args.seeds
    if getattr(args, "output", None):
        cfg.output = args.output
    if getattr(args, "policy", None):
        cfg.trim.policy = args.policy
    if getattr(args, "max_depth", None) is not None:
        cfg.max_depth = args.max_depth
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    if getattr(args, "model", None):
        cfg.classifier.model = args.model
    if getattr(args, "vote_threshold", None) is not None:
        cfg.classifier.vote_threshold = args.vote_threshold
    if getattr(args, "browser_endpoint", None):
        cfg.headless.endpoint = args.browser_endpoint
    if getattr(args, "no_robots", False):
        cfg.static.robots = False
    for host in getattr(args, "ad_domain", None) or []:
        cfg.classifier.ad_domains.append(host)
    return cfg.validate()


# -- subcommands ---------------------------------------------------------------

def cmd_crawl(args) -> int:
    from .orchestrator import run_crawl

    report = run_crawl(_config(args))
    _emit(report.to_json(), args.json, report.table())
    return EXIT_FAILURES if report.failures else EXIT_OK


def cmd_compare(args) -> int:
    from .orchestrator import compare_modes, compare_outputs

    if args.dirs:
        comparison = compare_outputs(args.dirs)
    else:
        base = _config(args)
        modes = [m.strip() for m in args.modes.split(",") if m.strip()]
        unknown = [m for m in modes if m not in MODES]
        if unknown:
            raise ConfigError(f"unknown modes {unknown}")
        configs = [
            dataclasses.replace(base, mode=m, output=os.path.join(base.output, f"{i:02d}-{m}")).validate()
            for i, m in enumerate(modes)
        ]
        comparison = compare_modes(configs)
    _emit(comparison.to_json(), args.json, comparison.table())
    return EXIT_OK


def cmd_dedup_report(args) -> int:
    from .frontier import duplicate_report
    from .records import read_log
    from .uri_norm import ALL_POLICIES, TrimPolicy

    records = read_log(args.log)
    policies = ALL_POLICIES if args.policy == "all" else (TrimPolicy.from_name(args.policy),)
    rows = {}
    for p in policies:
        rep = duplicate_report(records, p)
        rows[p.name] = {
            "uri_duplicates": rep.uri_duplicates,
            "uri_and_entity_duplicates": rep.uri_and_entity_duplicates,
            "accuracy": rep.accuracy,
            "tp": rep.tp, "fp": rep.fp, "fn": rep.fn, "tn": rep.tn,
            "total": rep.total,
        }
    lines = [f"{'policy':<12} {'URI dups':>9} {'URI+entity':>11} {'accuracy':>9}"]
    for name, r in rows.items():
        lines.append(f"{name:<12} {r['uri_duplicates']:>9} {r['uri_and_entity_duplicates']:>11} {r['accuracy']:>9.3f}")
    _emit(rows, args.json, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_features(args) -> int:
    from .classifier.features import DOM_ONLY, FULL, extract_features
    from .domains import registrable_domain
    from .static_tier import StaticTier
    from .uri_norm import parse

    cfg = _config(args)
    uri = parse(args.url)
    with StaticTier(cfg.static) as tier:
        result = tier.fetch_static(uri)
    capture = None
    if args.headless:
        from .headless import fetch_headless

        capture = fetch_headless(uri, cfg.headless)
    vec = extract_features(
        result.dom_snapshot, result.external_scripts, capture, registrable_domain(uri.host),
        cfg.classifier.ad_domains, uri, FULL if args.headless else DOM_ONLY,
    )
    _emit({"uri": str(uri), "features": vec.to_json()}, True)
    return EXIT_OK


def cmd_train(args) -> int:
    from .classifier.model import Hyperparams, read_examples, train

    examples = read_examples(args.examples)
    hp = Hyperparams(n_trees=args.trees, max_depth=args.max_depth)
    model = train(examples, args.feature_mode, hp, args.seed)
    model.save(args.output)
    print(f"trained {len(model.trees)} trees on {len(examples)} examples ({args.feature_mode}) -> {args.output}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .classifier.model import EnsembleModel, cross_validate, evaluate, read_examples

    examples = read_examples(args.examples)
    if args.model:
        result = evaluate(EnsembleModel.load(args.model), examples).to_json()
    else:
        result = cross_validate(examples, args.folds, args.feature_mode, args.seed).to_json()
    _emit(result, True)
    return EXIT_OK


def cmd_label(args) -> int:
    from .classifier.model import write_examples
    from .fixtures import Manifest
    from .orchestrator import label_corpus

    examples = label_corpus(args.crawl_dir, Manifest.load(args.corpus), args.feature_mode)
    write_examples(examples, args.output)
    counts = {}
    for ex in examples:
        counts[ex.label] = counts.get(ex.label, 0) + 1
    print(f"wrote {len(examples)} examples {dict(sorted(counts.items()))} -> {args.output}")
    return EXIT_OK


def _parse_counts(text: str) -> dict:
    counts = {}
    for part in text.split(","):
        if part.strip():
            kind, _, n = part.partition("=")
            counts[kind.strip()] = int(n)
    return counts


def cmd_serve_fixtures(args) -> int:
    from .fixtures import CorpusSpec, generate_corpus, serve

    if args.generate:
        spec = CorpusSpec(_parse_counts(args.generate), delay_ms=args.delay_ms)
        generate_corpus(spec, args.seed, args.corpus)
    hosts = tuple(args.host) if args.host else ("127.0.0.1", "127.0.0.2", "127.0.0.3")
    server = serve(args.corpus, args.port, args.latency, hosts)
    print(f"serving {len(server.manifest.pages)} pages at {server.origin} "
          f"(alias {server.alt_origin}, ad host {server.ad_origin})", flush=True)
    if args.seeds_out:
        with open(args.seeds_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(server.page_urls()) + "\n")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _crawl_options(p: argparse.ArgumentParser, with_mode: bool = True):
    p.add_argument("-c", "--config", help="YAML or JSON config file")
    if with_mode:
        p.add_argument("--mode", choices=MODES)
    p.add_argument("--seeds", help="seed list, one URI per line")
    p.add_argument("--output", help="output directory")
    p.add_argument("--policy", help="trim policy (NoTrim, OriginTrim, BaseTrim, SessionTrim, HttpTrim)")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--model", help="classifier model for classified_two_tier")
    p.add_argument("--vote-threshold", type=float)
    p.add_argument("--browser-endpoint", help="websocket debugging endpoint of a running browser")
    p.add_argument("--no-robots", action="store_true", help="ignore robots.txt")
    p.add_argument("--ad-domain", action="append", help="extra ad domain (repeatable)")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiercrawl", description="Two-tier archival crawler.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", help="run one crawl")
    _crawl_options(p)
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("compare", help="compare crawl modes over the same seeds")
    p.add_argument("dirs", nargs="*", help="finished crawl output directories to compare")
    p.add_argument("--modes", default="static_only,headless_only,classified_two_tier",
                   help="comma-separated modes to run when no directories are given")
    _crawl_options(p, with_mode=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dedup-report", help="duplicate URI / entity analysis of a crawl log")
    p.add_argument("log")
    p.add_argument("--policy", default="all")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_dedup_report)

    p = sub.add_parser("features", help="print the feature vector of one page")
    p.add_argument("url")
    p.add_argument("--headless", action="store_true", help="also capture with the browser (full features)")
    p.add_argument("-c", "--config")
    p.add_argument("--browser-endpoint")
    p.add_argument("--no-robots", action="store_true")
    p.add_argument("--ad-domain", action="append")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a classifier from labeled examples")
    p.add_argument("examples")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--feature-mode", choices=("dom_only", "full"), default="dom_only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=60)
    p.add_argument("--max-depth", type=int, default=6)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a model, or cross-validate without one")
    p.add_argument("examples")
    p.add_argument("--model")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--feature-mode", choices=("dom_only", "full"), default="dom_only")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("label", help="label a crawled fixture corpus from its manifest")
    p.add_argument("crawl_dir")
    p.add_argument("--corpus", required=True, help="fixture corpus directory")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--feature-mode", choices=("dom_only", "full"), default="dom_only")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("serve-fixtures", help="serve (and optionally generate) a fixture corpus")
    p.add_argument("corpus")
    p.add_argument("--generate", help="kind=count list, e.g. static=50,script_injected=50")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delay-ms", type=int)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--latency", type=float, default=0.0, help="seconds added to every response")
    p.add_argument("--host", action="append", help="listen address; first is the origin, then alias, then ad host")
    p.add_argument("--seeds-out", help="write the page URIs here as a seed list")
    p.set_defaults(func=cmd_serve_fixtures)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ManifestMiss, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BrowserUnavailable, PortInUse, IoFailure, OSError) as exc:
        print(f"environment error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except CrawlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Comparing crawl modes over the same seeds, and labeling a crawled fixture corpus."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from ..classifier.features import DOM_ONLY, FULL, FeatureVector
from ..classifier.model import LabeledExample
from ..config import CrawlConfig
from ..errors import ManifestMiss, PolicyMismatch, SeedMismatch
from ..frontier import frontier_algebra
from ..records import read_seeds
from ..uri_norm import parse
from .report import CrawlReport, build_report, crawl_frontier, policy_from_header, read_events, run_header


@dataclass
class Comparison:
    runs: List[str]
    reports: Dict[str, CrawlReport]
    overlaps: Dict[str, dict]
    speed_ratio: Dict[str, Dict[str, float]]
    frontier_ratio: Dict[str, Dict[str, float]]

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "t_uri": {k: self.reports[k].crawl_rate for k in self.runs},
            "frontier_size": {k: self.reports[k].frontier_size for k in self.runs},
            "overlaps": self.overlaps,
            "speed_ratio": self.speed_ratio,
            "frontier_ratio": self.frontier_ratio,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def table(self) -> str:
        width = max(len(r) for r in self.runs)
        lines = [f"{'run'.ljust(width)}  {'t_URI':>9}  {'|F|':>7}"]
        for r in self.runs:
            rep = self.reports[r]
            lines.append(f"{r.ljust(width)}  {rep.crawl_rate:9.3f}  {rep.frontier_size:7d}")
        lines.append("")
        lines.append("ratios (row / column): t_URI, |F|")
        lines.append(" " * width + "  " + "  ".join(c.rjust(15) for c in self.runs))
        for a in self.runs:
            cells = [f"{self.speed_ratio[a][b]:6.2f},{self.frontier_ratio[a][b]:7.2f}".rjust(15) for b in self.runs]
            lines.append(a.ljust(width) + "  " + "  ".join(cells))
        return "\n".join(lines) + "\n"


def _run_names(modes: Sequence[str]) -> List[str]:
    seen: Dict[str, int] = {}
    names = []
    for m in modes:
        seen[m] = seen.get(m, 0) + 1
        names.append(m if seen[m] == 1 else f"{m}#{seen[m]}")
    return names


def compare_outputs(out_dirs: Sequence[str]) -> Comparison:
    """Compare finished crawls from their output directories."""
    headers = [run_header(read_events(os.path.join(d, "events.jsonl"))) for d in out_dirs]
    policies = {policy_from_header(h) for h in headers}
    if len(policies) > 1:
        raise PolicyMismatch("crawls were run under different trim policies")
    names = _run_names([h["mode"] for h in headers])
    reports = {n: build_report(d) for n, d in zip(names, out_dirs)}
    policy = policies.pop()
    frontiers = {n: crawl_frontier(d, policy) for n, d in zip(names, out_dirs)}
    overlaps = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ov = frontier_algebra(frontiers[a], frontiers[b])
            overlaps[f"{a} vs {b}"] = {"only_a": ov.only_a, "only_b": ov.only_b, "both": ov.both}

    def ratio(x, y):
        return x / y if y else float("inf")

    speed = {a: {b: ratio(reports[a].crawl_rate, reports[b].crawl_rate) for b in names} for a in names}
    size = {a: {b: ratio(reports[a].frontier_size, reports[b].frontier_size) for b in names} for a in names}
    return Comparison(names, reports, overlaps, speed, size)


def _seed_set(cfg: CrawlConfig):
    return tuple(str(s) for s in read_seeds(cfg.seeds)) if cfg.seeds else None


def compare_modes(configs: Sequence[CrawlConfig], runner: Optional[Callable] = None, seeds=None, **kwargs) -> Comparison:
    """Run each config (same seeds, same trim policy) and compare the crawls."""
    from .engine import run_crawl

    runner = runner or run_crawl
    if not configs:
        raise ValueError("nothing to compare")
    if seeds is None:
        seed_sets = {_seed_set(c) for c in configs}
        if len(seed_sets) > 1:
            raise SeedMismatch("configs crawl different seed lists")
    if len({c.policy for c in configs}) > 1:
        raise PolicyMismatch("configs use different trim policies")
    outs = [c.output for c in configs]
    if len(set(map(os.path.abspath, outs))) != len(outs):
        raise SeedMismatch("each compared crawl needs its own output directory")
    for c in configs:
        runner(c, seeds=seeds, **kwargs)
    return compare_outputs(outs)


def read_feature_rows(out_dir) -> List[dict]:
    path = os.path.join(out_dir, "features.jsonl")
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def label_corpus(out_dir, manifest, feature_mode: str = DOM_ONLY) -> List[LabeledExample]:
    """Pair every extracted page of a crawl with its manifest label.

    Pages are matched to the manifest by path.  Examples are sorted by URI so
    the output does not depend on worker scheduling.
    """
    pages = manifest.by_path()
    out = []
    for row in read_feature_rows(out_dir):
        uri = parse(row["uri"])
        page = pages.get(uri.path)
        if page is None:
            raise ManifestMiss(f"{uri} is not a manifest page")
        key = FULL if feature_mode == FULL else DOM_ONLY
        if key not in row:
            raise ManifestMiss(f"{uri} has no {feature_mode} features in this crawl")
        out.append(LabeledExample(uri, FeatureVector.from_json(row[key]), page.label))
    out.sort(key=lambda ex: str(ex.uri))
    return out

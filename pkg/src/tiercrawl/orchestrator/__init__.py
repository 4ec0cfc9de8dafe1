"""Two-tier crawl engine, experiment comparisons and reporting."""
from .compare import Comparison, compare_modes, compare_outputs, label_corpus
from .engine import Crawler, run_crawl
from .report import CrawlReport, build_report, crawl_frontier

__all__ = [
    "Comparison", "compare_modes", "compare_outputs", "label_corpus", "Crawler", "run_crawl",
    "CrawlReport", "build_report", "crawl_frontier",
]

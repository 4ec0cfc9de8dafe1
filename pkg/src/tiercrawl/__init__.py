"""Two-tiered archival crawling: a fast static tier, a headless-browser tier,
and a classifier that routes pages with deferred representations to the latter."""

__version__ = "0.1.0"

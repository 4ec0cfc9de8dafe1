import os

import pytest

from tiercrawl.config import HeadlessConfig, StaticConfig
from tiercrawl.fixtures import generate_corpus, serve
from tiercrawl.headless.browser import browser_available
from tiercrawl.static_tier import StaticTier

# Network-idle window used by browser tests: long enough for the fixtures'
# 100-400 ms post-load injections, short enough to keep the suite fast.
TEST_IDLE_WINDOW = 1.0
FIXTURE_STATIC = StaticConfig(robots=False, host_delay=0.0)

SMALL_MIX = {
    "static": 3,
    "script_injected": 3,
    "iframe_nested": 2,
    "delayed_load": 2,
    "infinite_poller": 1,
    "speculative_only": 2,
}


def headless_config(**overrides) -> HeadlessConfig:
    base = dict(idle_window=TEST_IDLE_WINDOW, max_wait=6.0)
    base.update(overrides)
    return HeadlessConfig(**base)


def write_page(corpus_dir, name: str, html: str) -> str:
    """Drop a hand-written page into a corpus; returns its path on the server."""
    path = os.path.join(corpus_dir, "pages", name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(html)
    return f"/pages/{name}"


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("small-corpus")
    manifest = generate_corpus(SMALL_MIX, seed=21, out_dir=str(d))
    return str(d), manifest


@pytest.fixture(scope="session")
def small_server(small_corpus):
    server = serve(small_corpus[0])
    yield server
    server.stop()


@pytest.fixture
def static_tier():
    with StaticTier(FIXTURE_STATIC) as tier:
        yield tier


@pytest.fixture(scope="session")
def headless_tier():
    if not browser_available():
        pytest.skip("no headless browser available")
    from tiercrawl.headless import HeadlessTier

    with HeadlessTier(headless_config()) as tier:
        yield tier


# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import time

import pytest

from conftest import FIXTURE_STATIC, write_page
from tiercrawl.config import StaticConfig
from tiercrawl.errors import DnsFailure, NonHtml
from tiercrawl.fixtures import CorpusSpec, generate_corpus, serve
from tiercrawl.records import DNS_FAILURE
from tiercrawl.static_tier import StaticTier
from tiercrawl.uri_norm import parse


def uris(items):
    return {str(u) for u in items}


def test_youtube_iframe_discovered(small_corpus, small_server, static_tier):
    path = write_page(small_corpus[0], "embed.html", (
        '<html><body><iframe width="560" height="315" '
        'src="//www.youtube.com/embed/QyLl4Fd4cGA?rel=0" frameborder="0"></iframe></body></html>'
    ))
    result = static_tier.fetch_static(parse(small_server.url(path)))
    assert result.record.status == 200
    assert "http://www.youtube.com/embed/QyLl4Fd4cGA?rel=0" in uris(result.record.discovered)


def test_ten_declared_images(tmp_path, static_tier):
    m = generate_corpus(CorpusSpec({"static": 1}, images=(10, 10), extras=False), seed=2, out_dir=str(tmp_path))
    page = m.pages[0]
    assert len(page.declared_resources) == 10
    with serve(str(tmp_path)) as server:
        result = static_tier.fetch_static(parse(server.url(page.path)))
        assert uris(result.dom_links) == {server.expand(r) for r in page.declared_resources}


def test_basic_subset_of_static(small_corpus, small_server, static_tier):
    for page in small_corpus[1].pages:
        uri = parse(small_server.url(page.path))
        basic = set(static_tier.fetch_basic(uri).discovered)
        static = set(static_tier.fetch_static(uri).record.discovered)
        assert basic <= static


def test_speculative_literals_found(small_corpus, small_server, static_tier):
    for page in small_corpus[1].pages:
        if page.kind != "speculative_only":
            continue
        result = static_tier.fetch_static(parse(small_server.url(page.path)))
        want = {small_server.expand(r) for r in page.speculative_resources}
        assert want and want <= uris(result.speculative_links)


def test_script_free_page_same_both_ways(small_corpus, small_server, static_tier):
    path = write_page(small_corpus[0], "plain.html", '<html><body><img src="/r/p1.png"><a href="/r/p2.css">x</a></body></html>')
    uri = parse(small_server.url(path))
    assert static_tier.fetch_basic(uri).discovered == static_tier.fetch_static(uri).record.discovered


def test_injected_image_invisible_to_static(small_corpus, small_server, static_tier):
    path = write_page(small_corpus[0], "one-each.html", (
        '<html><body><img src="/r/declared.png"><script>\n'
        "var i = document.createElement('img');\n"
        "i.src = '' + '/r/' + 'injected' + '.png';\n"
        "document.body.appendChild(i);\n"
        "</script></body></html>"
    ))
    uri = parse(small_server.url(path))
    basic = uris(static_tier.fetch_basic(uri).discovered)
    static = uris(static_tier.fetch_static(uri).record.discovered)
    assert basic == {small_server.url("/r/declared.png")}
    assert small_server.url("/r/injected.png") not in static


def test_http_error_is_recorded(small_server, static_tier):
    result = static_tier.fetch_static(parse(small_server.url("/pages/does-not-exist.html")))
    assert result.record.status == 404
    assert result.record.discovered == ()
    assert result.record.digest is not None


def test_non_html_raises_with_record(small_server, static_tier):
    with pytest.raises(NonHtml) as info:
        static_tier.fetch_static(parse(small_server.url("/r/picture.png")))
    assert info.value.record.status == 200 and info.value.record.digest


def test_dereference_digests_without_extraction(small_server, static_tier):
    a = static_tier.dereference(parse(small_server.url("/r/a.gif")))
    b = static_tier.dereference(parse(small_server.url("/r/a.gif")))
    assert a.status == 200 and a.digest == b.digest and a.discovered == ()


def test_unresolvable_host(static_tier):
    uri = parse("http://no-such-host.invalid/")
    with pytest.raises(DnsFailure) as info:
        static_tier.fetch_static(uri)
    assert info.value.record.status == DNS_FAILURE
    assert static_tier.dereference(uri).status == DNS_FAILURE


def test_politeness_delay(small_server):
    with StaticTier(StaticConfig(robots=False, host_delay=0.2)) as tier:
        t0 = time.monotonic()
        for i in range(3):
            tier.dereference(parse(small_server.url(f"/r/polite{i}.png")))
        assert time.monotonic() - t0 >= 0.4


def test_robots_missing_allows_everything(small_server):
    with StaticTier(StaticConfig(robots=True, host_delay=0.0)) as tier:
        assert tier.allowed(parse(small_server.url("/pages/anything.html")))


def test_fixture_config_skips_robots(small_server):
    assert not FIXTURE_STATIC.robots
    with StaticTier(FIXTURE_STATIC) as tier:
        small_server.clear_log()
        tier.dereference(parse(small_server.url("/r/q.png")))
        assert [r.path for r in small_server.requests()] == ["/r/q.png"]

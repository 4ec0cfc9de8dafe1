import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiercrawl.errors import UnparseableMarkup
from tiercrawl.markup import css_urls, extract_speculative, scan_markup
from tiercrawl.uri_norm import parse

BASE = parse("http://www.truthinshredding.com/")


def links(html, base=BASE):
    return [str(u) for u in scan_markup(html, base).dom_links]


def test_protocol_relative_iframe():
    html = '<iframe width="560" height="315" src="//www.youtube.com/embed/QyLl4Fd4cGA?rel=0" frameborder="0"></iframe>'
    assert links(html) == ["http://www.youtube.com/embed/QyLl4Fd4cGA?rel=0"]


def test_empty_page():
    page = scan_markup("<html><body><p>nothing</p></body></html>", BASE)
    assert page.dom_links == [] and page.inline_scripts == [] and page.script_tags == 0


def test_link_bearing_attributes():
    html = """
    <link rel="stylesheet" href="/s.css"><link rel="canonical" href="/canon">
    <img src="a.png" srcset="b.png 2x, c.png 3x"><a href="/next">n</a>
    <div style="background:url('/bg.gif')"></div>
    <style>@import "imp.css"; .x { background: url(/sprite.png) }</style>
    <script src="/app.js"></script><video poster="/p.jpg"><source src="/v.mp4"></video>
    <object data="/o.swf"></object><a href="javascript:void(0)">x</a><img src="data:image/png;base64,AA">
    """
    got = set(links(html))
    want = {
        "http://www.truthinshredding.com/" + p
        for p in ("s.css", "a.png", "b.png", "c.png", "next", "bg.gif", "imp.css", "sprite.png", "app.js",
                  "p.jpg", "v.mp4", "o.swf")
    }
    assert got == want


def test_base_element():
    html = '<base href="http://cdn.example.org/assets/"><img src="x.png">'
    assert links(html) == ["http://cdn.example.org/assets/x.png"]


def test_script_accounting():
    html = """
    <script>var a = 1;</script>
    <script src="/ext.js">ignored body</script>
    <script type="application/ld+json">{"@context": "http://schema.org"}</script>
    <script type="module">import x from '/m.js';</script>
    <button onclick="go()">b</button><div onmouseover="x()"></div>
    """
    page = scan_markup(html, BASE)
    assert page.script_tags == 3
    assert page.inline_scripts == ["var a = 1;", "import x from '/m.js';"]
    assert [str(u) for u in page.script_srcs] == ["http://www.truthinshredding.com/ext.js"]
    assert page.interactive_elements == 2


def test_bytes_input():
    assert links(b'<img src="/z.png">') == ["http://www.truthinshredding.com/z.png"]


def test_non_text_rejected():
    with pytest.raises(UnparseableMarkup):
        scan_markup(12345, BASE)


def test_css_urls():
    assert css_urls("a{background:url( \"/x.png\" )} @import 'y.css';") == ["/x.png", "y.css"]


# --- speculative extraction ------------------------------------------------------------

def spec(src, base=BASE):
    return [str(u) for u in extract_speculative(src, base)]


def test_ad_loader_literal():
    src = '<script type="text/javascript" src="http://pagead2.googlesyndication.com/pagead/show_ads.js">'
    js = 'var s = "http://pagead2.googlesyndication.com/pagead/show_ads.js";'
    assert spec(js) == ["http://pagead2.googlesyndication.com/pagead/show_ads.js"]
    assert "show_ads.js" in src


def test_concatenation_yields_only_prefix():
    assert spec('var u = "http://x.com/" + id + "/img.png";') == ["http://x.com/"]


def test_empty_source():
    assert spec("") == []


def test_scheme_and_root_relative():
    js = "load('//cdn.example.net/lib.js'); img('/images/logo.svg'); other('/api/users');"
    assert spec(js) == ["http://cdn.example.net/lib.js", "http://www.truthinshredding.com/images/logo.svg"]


def test_escaped_slashes_and_templates():
    js = r'var a = "http:\/\/e.com\/x.js"; var b = `http://t.com/${v}`; var c = `http://t.com/ok.css`;'
    assert spec(js) == ["http://e.com/x.js", "http://t.com/ok.css"]


def test_non_uri_literals_ignored():
    assert spec("var a = 'hello world'; var b = 'www.example.com'; var c = '/relative';") == []


@settings(max_examples=200)
@given(st.text(alphabet=st.sampled_from(list("ab/:.\"'+ hpts(){};\\`x.jsonpg")), max_size=120))
def test_speculative_deterministic_and_reparsable(src):
    first = extract_speculative(src, BASE)
    assert first == extract_speculative(src, BASE)
    for u in first:
        assert parse(str(u)) == u

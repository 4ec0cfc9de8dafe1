import itertools
from urllib.parse import urljoin

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiercrawl.errors import MalformedUri, RelativeUri
from tiercrawl.uri_norm import (
    ALL_POLICIES,
    TrimPolicy,
    TrimVariant,
    dedup_key,
    mentions_uri,
    parse,
    resolve,
    trim,
)

from strategies import raw_uris

TABLE3 = [
    # (policy, original, trimmed)
    (
        TrimPolicy.no_trim(),
        "http://example.com/folder/index.html?param=value",
        "http://example.com/folder/index.html?param=value",
    ),
    (
        TrimPolicy.origin(),
        "http://example.com/folder/index.html?callback=cs.odu.edu",
        "http://example.com/folder/index.html",
    ),
    (
        TrimPolicy.base(),
        "http://example.com/folder/index.html?param=value",
        "http://example.com/folder/index.html",
    ),
    (
        TrimPolicy.session(),
        "http://example.com/folder/index.html?param=value&sessionid=12345",
        "http://example.com/folder/index.html?param=value",
    ),
    (
        TrimPolicy.http(),
        "http://example.com/folder/index.html?param=value&httpParam=http://www.test.com/",
        "http://example.com/folder/index.html?param=value",
    ),
]


@pytest.mark.parametrize("policy,original,trimmed", TABLE3, ids=lambda x: getattr(x, "name", None))
def test_trim_table(policy, original, trimmed):
    assert str(trim(parse(original), policy)) == trimmed


def test_parse_components():
    u = parse("http://example.com/folder/index.html?param=value")
    assert (u.scheme, u.authority, u.path) == ("http", "example.com", "/folder/index.html")
    assert u.params == (("param", "value"),)


def test_parse_case_normalization():
    u = parse("HTTP://EXAMPLE.COM/")
    assert (u.scheme, u.authority, u.path) == ("http", "example.com", "/")


@pytest.mark.parametrize("raw", ["not a uri", "", "   ", "http://", "http://a.com:99999/", "mailto:x@y.z"])
def test_parse_malformed(raw):
    with pytest.raises(MalformedUri):
        parse(raw)


@pytest.mark.parametrize("raw", ["/folder/index.html", "//www.youtube.com/embed/x", "index.html"])
def test_parse_relative(raw):
    with pytest.raises(RelativeUri):
        parse(raw)


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("http://a.com:80/x", "http://a.com/x"),
        ("https://a.com:443/x", "https://a.com/x"),
        ("http://a.com:8080/x", "http://a.com:8080/x"),
        ("http://a.com", "http://a.com/"),
        ("http://a.com/%7euser/%41", "http://a.com/~user/A"),
        ("http://a.com/a%2fb", "http://a.com/a%2Fb"),
        ("http://a.com/a/./b/../c", "http://a.com/a/c"),
        ("http://a.com/x?b=2&a=1#frag", "http://a.com/x?b=2&a=1"),
        ("http://a.com/x?flag&a=&&b=1", "http://a.com/x?flag&a=&b=1"),
        ("http://a.com/café", "http://a.com/caf%C3%A9"),
        ("http://a.com/100%", "http://a.com/100%25"),
    ],
)
def test_parse_normalization(raw, expected):
    assert str(parse(raw)) == expected


def test_params_keep_source_order():
    assert [n for n, _ in parse("http://a.com/?z=1&a=2&m").params] == ["z", "a", "m"]


def test_flag_param_has_no_value():
    assert parse("http://a.com/?flag").params == (("flag", None),)
    assert parse("http://a.com/?flag=").params == (("flag", ""),)


# --- resolution -------------------------------------------------------------

BASE = "http://a/b/c/d;p?q"
# RFC 3986 section 5.4 examples plus crawler-typical cases.
REFERENCES = [
    "g:h", "g", "./g", "g/", "/g", "//g", "?y", "g?y", "#s", "g#s", "g?y#s", ";x",
    "g;x", "g;x?y#s", "", ".", "./", "..", "../", "../g", "../..", "../../",
    "../../g", "../../../g", "../../../../g", "/./g", "/../g", "g.", ".g", "g..",
    "..g", "./../g", "./g/.", "g/./h", "g/../h", "g;x=1/./y", "g;x=1/../y",
    "g?y/./x", "g?y/../x", "g#s/./x", "g#s/../x", "http://other.org/x",
    "//cdn.example.net/lib.js?v=2", "/static/img/logo.png", "img/a%20b.png",
    "../css/site.css", "?page=2", "HTTPS://Other.Org:443/Y", "x/y/../../z",
    "/a//b",
]


def test_reference_table_size():
    assert len(REFERENCES) >= 50


@pytest.mark.parametrize("ref", REFERENCES)
def test_resolve_matches_stdlib(ref):
    # the stdlib resolver is the independent oracle; only its output is normalized
    base = parse(BASE)
    expected = urljoin("http://a/b/c/d;p?q", ref)
    if not expected.lower().startswith(("http://", "https://")):
        with pytest.raises(MalformedUri):
            resolve(base, ref)
        return
    assert resolve(base, ref) == parse(expected)


def test_resolve_departs_from_stdlib_where_rfc_differs():
    base = parse(BASE)
    # urljoin collapses the empty segment; RFC 3986 keeps it
    assert str(resolve(base, "g//h")) == "http://a/b/c/g//h"
    # an empty authority is not a usable http URI
    with pytest.raises(MalformedUri):
        resolve(base, "///double")


def test_resolve_protocol_relative_iframe():
    base = parse("http://www.truthinshredding.com/")
    got = resolve(base, "//www.youtube.com/embed/QyLl4Fd4cGA?rel=0")
    assert str(got) == "http://www.youtube.com/embed/QyLl4Fd4cGA?rel=0"


def test_resolve_empty_reference():
    assert str(resolve(parse("http://a.com/x/y"), "")) == "http://a.com/x/y"


def test_resolve_parent():
    assert str(resolve(parse("http://a.com/x/"), "../z")) == "http://a.com/z"


def test_resolve_strips_embedded_newlines():
    assert str(resolve(parse("http://a.com/"), "/im\nage.png")) == "http://a.com/image.png"


# --- trim policies ----------------------------------------------------------

def test_http_trim_detector():
    assert mentions_uri("http://www.test.com/")
    assert mentions_uri("https%3A%2F%2Fx.org")
    assert mentions_uri("//cdn.net/x")
    assert mentions_uri("www.foo.com")
    assert not mentions_uri("value")
    assert not mentions_uri(None)
    assert not mentions_uri("cs.odu.edu")


def test_flag_params_survive_non_base_policies():
    u = parse("http://a.com/?flag&sessionid=1")
    assert trim(u, TrimPolicy.session()).params == (("flag", None),)
    assert trim(u, TrimPolicy.http()).params == u.params
    assert trim(u, TrimPolicy.base()).params == ()


def test_name_lists_case_insensitive_and_configurable():
    u = parse("http://a.com/?SessionID=9&track=1")
    assert str(trim(u, TrimPolicy.session())) == "http://a.com/?track=1"
    custom = TrimPolicy.session(session_names={"TRACK"})
    assert str(trim(u, custom)) == "http://a.com/?SessionID=9"


def test_policy_from_name():
    assert TrimPolicy.from_name("BaseTrim").variant is TrimVariant.BASE_TRIM
    assert TrimPolicy.from_name("session").variant is TrimVariant.SESSION_TRIM
    assert TrimPolicy.from_name("no_trim").variant is TrimVariant.NO_TRIM
    with pytest.raises(ValueError):
        TrimPolicy.from_name("fuzzy")


def test_dedup_key_specificclick():
    u = parse("http://dg.specificclick.net/?y=3&t=h&u=http%3A%2F%2Fmisscellania.blogspot.com")
    assert dedup_key(u, TrimPolicy.base()).key == "http://dg.specificclick.net/"


def test_dedup_key_no_trim():
    assert dedup_key(parse("http://a.com/"), TrimPolicy.no_trim()).key == "http://a.com/"


def test_session_params_permutations_share_key():
    """Every ordering and value choice of session params collapses to one key."""
    base_params = [("a", "1"), ("b", None)]
    session_params = [("sessionid", "x"), ("sid", "y"), ("PHPSESSID", "z")]
    policy = TrimPolicy.session()
    keys = set()
    for k in range(len(session_params) + 1):
        for chosen in itertools.combinations(session_params, k):
            for value_variant in ("v1", "v2"):
                chosen_v = [(n, value_variant) for n, _ in chosen]
                # session params may be interleaved anywhere; the other params keep order
                for positions in itertools.combinations(range(len(base_params) + len(chosen_v)), len(chosen_v)):
                    for order in itertools.permutations(chosen_v):
                        merged, it_s, it_b = [], iter(order), iter(base_params)
                        for i in range(len(base_params) + len(chosen_v)):
                            merged.append(next(it_s) if i in positions else next(it_b))
                        q = "&".join(n if v is None else f"{n}={v}" for n, v in merged)
                        keys.add(dedup_key(parse("http://a.com/p?" + q), policy).key)
    assert keys == {"http://a.com/p?a=1&b"}


# --- properties -------------------------------------------------------------

@settings(max_examples=300)
@given(raw_uris())
def test_round_trip(raw):
    u = parse(raw)
    assert parse(str(u)) == u
    assert "#" not in str(u)


@settings(max_examples=300)
@given(raw_uris())
def test_trim_idempotent_and_preserves_location(raw):
    u = parse(raw)
    for policy in ALL_POLICIES:
        t = trim(u, policy)
        assert trim(t, policy) == t
        assert (t.scheme, t.authority, t.path) == (u.scheme, u.authority, u.path)
    assert trim(u, TrimPolicy.no_trim()) == u
    assert trim(u, TrimPolicy.base()).params == ()


@settings(max_examples=200)
@given(raw_uris(), raw_uris(), raw_uris())
def test_key_equality_is_equivalence(a, b, c):
    for policy in ALL_POLICIES:
        ka, kb, kc = (dedup_key(parse(x), policy) for x in (a, b, c))
        assert ka == ka
        assert (ka == kb) == (kb == ka)
        if ka == kb and kb == kc:
            assert ka == kc


@settings(max_examples=200)
@given(raw_uris(), raw_uris())
def test_parameter_policies_refine_base(a, b):
    ua, ub = parse(a), parse(b)
    base = TrimPolicy.base()
    for policy in (TrimPolicy.origin(), TrimPolicy.session(), TrimPolicy.http(), TrimPolicy.no_trim()):
        if dedup_key(ua, policy).key == dedup_key(ub, policy).key:
            assert dedup_key(ua, base).key == dedup_key(ub, base).key


def _duplicates(uris, policy):
    return len(uris) - len({dedup_key(u, policy).key for u in uris})


@settings(max_examples=100)
@given(st.lists(raw_uris(), min_size=1, max_size=40))
def test_monotone_coarsening(raws):
    uris = [parse(r) for r in raws]
    none = _duplicates(uris, TrimPolicy.no_trim())
    base = _duplicates(uris, TrimPolicy.base())
    for policy in (TrimPolicy.origin(), TrimPolicy.session(), TrimPolicy.http()):
        assert none <= _duplicates(uris, policy) <= base

"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from tiercrawl.uri_norm import DEFAULT_ORIGIN_NAMES, DEFAULT_SESSION_NAMES

_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789-_", min_size=1, max_size=8)

hosts = st.sampled_from(
    ["example.com", "a.com", "cdn.example.org", "127.0.0.1", "www.test.co.uk", "localhost:8080"]
)
paths = st.lists(_word, max_size=4).map(lambda parts: "/" + "/".join(parts))

param_names = st.one_of(
    _word,
    st.sampled_from(sorted(DEFAULT_ORIGIN_NAMES | DEFAULT_SESSION_NAMES)),
    st.sampled_from(["SessionID", "Callback", "u", "url", "httpParam"]),
)
param_values = st.one_of(
    st.none(),
    st.just(""),
    _word,
    st.sampled_from(
        [
            "http://www.test.com/",
            "https%3A%2F%2Fx.org%2Fa",
            "//cdn.x.net/a.js",
            "www.misc.com",
            "cs.odu.edu",
            "12345",
            "a%20b",
        ]
    ),
)
params = st.lists(st.tuples(param_names, param_values), max_size=6)


@st.composite
def raw_uris(draw):
    scheme = draw(st.sampled_from(["http", "https", "HTTP"]))
    host = draw(hosts)
    path = draw(paths)
    ps = draw(params)
    query = "&".join(n if v is None else f"{n}={v}" for n, v in ps)
    frag = draw(st.sampled_from(["", "#top", "#a=b"]))
    return f"{scheme}://{host}{path}" + (f"?{query}" if query else "") + frag

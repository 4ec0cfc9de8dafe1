"""URI parsing, reference resolution and the query-parameter trim policies.

A :class:`NormalizedUri` is the unit of frontier identity.  Parsing lowercases
scheme and host, drops default ports and fragments, removes dot segments,
normalizes percent-encoding (unreserved characters decoded, hex digits
uppercased) and keeps query parameters in their source order.

Trim policies remove selected query parameters before string-match
deduplication::

    >>> u = parse("http://example.com/folder/index.html?param=value&sessionid=12345")
    >>> str(trim(u, TrimPolicy.session()))
    'http://example.com/folder/index.html?param=value'
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple
from urllib.parse import unquote

from .errors import MalformedUri, RelativeUri

__all__ = [
    "NormalizedUri",
    "TrimVariant",
    "TrimPolicy",
    "DedupKey",
    "parse",
    "resolve",
    "trim",
    "dedup_key",
    "mentions_uri",
    "ALL_POLICIES",
    "DEFAULT_ORIGIN_NAMES",
    "DEFAULT_SESSION_NAMES",
]

DEFAULT_ORIGIN_NAMES = frozenset({"origin", "callback", "domain", "referrer"})
DEFAULT_SESSION_NAMES = frozenset(
    {"session", "sessionid", "token_id", "sid", "jsessionid", "phpsessid"}
)

_DEFAULT_PORTS = {"http": 80, "https": 443}
_SCHEME_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*):")
_UNRESERVED = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-._~"
)
# Characters that may appear literally in a normalized path or query.
_ALLOWED = _UNRESERVED | frozenset("!$&'()*+,;=:@/?%")
_HEX = frozenset("0123456789abcdefABCDEF")
_WHITESPACE_RE = re.compile(r"[\s\x00-\x1f\x7f]")

Param = Tuple[str, Optional[str]]


def _normalize_component(text: str) -> str:
    """Normalize percent-encoding of one path or query component."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "%":
            if i + 2 < n and text[i + 1] in _HEX and text[i + 2] in _HEX:
                decoded = chr(int(text[i + 1 : i + 3], 16))
                if decoded in _UNRESERVED:
                    out.append(decoded)
                else:
                    out.append("%" + text[i + 1 : i + 3].upper())
                i += 3
                continue
            out.append("%25")
        elif ch in _ALLOWED:
            out.append(ch)
        else:
            out.extend("%{:02X}".format(b) for b in ch.encode("utf-8"))
        i += 1
    return "".join(out)


def _remove_dot_segments(path: str) -> str:
    # RFC 3986 section 5.2.4
    output: list[str] = []
    while path:
        if path.startswith("../"):
            path = path[3:]
        elif path.startswith("./"):
            path = path[2:]
        elif path.startswith("/./"):
            path = "/" + path[3:]
        elif path == "/.":
            path = "/"
        elif path.startswith("/../"):
            path = "/" + path[4:]
            if output:
                output.pop()
        elif path == "/..":
            path = "/"
            if output:
                output.pop()
        elif path in (".", ".."):
            path = ""
        else:
            start = 1 if path.startswith("/") else 0
            cut = path.find("/", start)
            if cut == -1:
                cut = len(path)
            output.append(path[:cut])
            path = path[cut:]
    return "".join(output)


def _split_params(query: str) -> Tuple[Param, ...]:
    params = []
    for piece in query.split("&"):
        if not piece:
            continue
        name, eq, value = piece.partition("=")
        params.append(
            (_normalize_component(name), _normalize_component(value) if eq else None)
        )
    return tuple(params)


def _normalize_authority(scheme: str, authority: str, raw: str) -> str:
    userinfo, at, hostport = authority.rpartition("@")
    if not at:
        userinfo, hostport = "", authority
    if hostport.startswith("["):
        end = hostport.find("]")
        if end == -1:
            raise MalformedUri(f"unterminated IPv6 literal in {raw!r}")
        host, rest = hostport[: end + 1], hostport[end + 1 :]
        if rest and not rest.startswith(":"):
            raise MalformedUri(f"bad authority in {raw!r}")
        port = rest[1:] if rest else ""
    else:
        host, _, port = hostport.partition(":")
    host = host.lower().rstrip(".")
    if not host:
        raise MalformedUri(f"missing host in {raw!r}")
    if any(c in host for c in "/\\?#%<>\"' "):
        raise MalformedUri(f"bad host in {raw!r}")
    if port:
        if not port.isdigit() or int(port) > 65535:
            raise MalformedUri(f"bad port in {raw!r}")
        if _DEFAULT_PORTS.get(scheme) == int(port):
            port = ""
        else:
            port = str(int(port))
    out = host + (":" + port if port else "")
    return (userinfo + "@" + out) if at else out


@dataclass(frozen=True)
class NormalizedUri:
    """An absolute, normalized URI.  ``str(uri)`` gives its serialized form."""

    scheme: str
    authority: str
    path: str
    params: Tuple[Param, ...] = ()

    @property
    def host(self) -> str:
        hostport = self.authority.rpartition("@")[2]
        if hostport.startswith("["):
            return hostport[: hostport.find("]") + 1]
        return hostport.partition(":")[0]

    @property
    def query(self) -> str:
        return "&".join(n if v is None else f"{n}={v}" for n, v in self.params)

    @property
    def origin(self) -> str:
        return f"{self.scheme}://{self.authority}"

    def with_params(self, params: Iterable[Param]) -> "NormalizedUri":
        return NormalizedUri(self.scheme, self.authority, self.path, tuple(params))

    def __str__(self) -> str:
        q = self.query
        return f"{self.scheme}://{self.authority}{self.path}" + (f"?{q}" if q else "")


def parse(raw: str) -> NormalizedUri:
    """Parse an absolute URI string.

    Raises :class:`RelativeUri` for scheme-less input and
    :class:`MalformedUri` for anything unparseable.
    """
    if not isinstance(raw, str):
        raise MalformedUri(f"expected str, got {type(raw).__name__}")
    text = raw.strip()
    if not text:
        raise MalformedUri("empty URI")
    if _WHITESPACE_RE.search(text):
        raise MalformedUri(f"whitespace in URI {raw!r}")
    m = _SCHEME_RE.match(text)
    if not m:
        raise RelativeUri(f"no scheme in {raw!r}")
    scheme = m.group(1).lower()
    rest = text[m.end() :]
    if not rest.startswith("//"):
        raise MalformedUri(f"URI {raw!r} has no authority component")
    rest = rest.partition("#")[0]
    rest = rest[2:]
    cut = len(rest)
    for sep in "/?":
        pos = rest.find(sep)
        if pos != -1:
            cut = min(cut, pos)
    authority, rest = rest[:cut], rest[cut:]
    path, _, query = rest.partition("?")
    authority = _normalize_authority(scheme, authority, raw)
    path = _remove_dot_segments(_normalize_component(path)) or "/"
    return NormalizedUri(scheme, authority, path, _split_params(query))


def _split_reference(ref: str):
    """Split a reference into (scheme, authority, path, query) per RFC 3986 appendix B."""
    ref = ref.partition("#")[0]
    scheme = None
    m = _SCHEME_RE.match(ref)
    if m:
        scheme, ref = m.group(1).lower(), ref[m.end() :]
    authority = None
    if ref.startswith("//"):
        ref = ref[2:]
        cut = len(ref)
        for sep in "/?":
            pos = ref.find(sep)
            if pos != -1:
                cut = min(cut, pos)
        authority, ref = ref[:cut], ref[cut:]
    path, q, query = ref.partition("?")
    return scheme, authority, path, (query if q else None)


def _merge(base: NormalizedUri, ref_path: str) -> str:
    if not base.path:
        return "/" + ref_path
    return base.path[: base.path.rfind("/") + 1] + ref_path


def resolve(base: NormalizedUri, reference: str) -> NormalizedUri:
    """Resolve ``reference`` against ``base`` (RFC 3986 section 5.2)."""
    ref = reference.strip()
    if _WHITESPACE_RE.search(ref):
        # Browsers strip tabs and newlines inside attribute URLs.
        ref = re.sub(r"[\t\n\r]", "", ref)
        if _WHITESPACE_RE.search(ref):
            raise MalformedUri(f"whitespace in reference {reference!r}")
    scheme, authority, path, query = _split_reference(ref)
    if scheme is not None:
        return parse(ref)
    if authority is not None:
        return parse(f"{base.scheme}://{authority}{path}" + (f"?{query}" if query is not None else ""))
    if path == "":
        t_path = base.path
        t_query = query if query is not None else base.query
    else:
        if path.startswith("/"):
            t_path = _remove_dot_segments(path)
        else:
            t_path = _remove_dot_segments(_merge(base, path))
        t_query = query
    text = f"{base.scheme}://{base.authority}{t_path}"
    if t_query:
        text += "?" + t_query
    return parse(text)


def mentions_uri(value: Optional[str]) -> bool:
    """True if a parameter value, once percent-decoded, refers to a URI."""
    if not value:
        return False
    decoded = unquote(value).lower()
    return (
        "http://" in decoded
        or "https://" in decoded
        or decoded.startswith("//")
        or decoded.startswith("www.")
    )


class TrimVariant(str, enum.Enum):
    NO_TRIM = "NoTrim"
    ORIGIN_TRIM = "OriginTrim"
    BASE_TRIM = "BaseTrim"
    SESSION_TRIM = "SessionTrim"
    HTTP_TRIM = "HttpTrim"


@dataclass(frozen=True)
class TrimPolicy:
    """A query-parameter trim policy.  Name lists match case-insensitively."""

    variant: TrimVariant = TrimVariant.NO_TRIM
    origin_names: frozenset = field(default=DEFAULT_ORIGIN_NAMES)
    session_names: frozenset = field(default=DEFAULT_SESSION_NAMES)

    def __post_init__(self):
        object.__setattr__(self, "variant", TrimVariant(self.variant))
        object.__setattr__(
            self, "origin_names", frozenset(n.lower() for n in self.origin_names)
        )
        object.__setattr__(
            self, "session_names", frozenset(n.lower() for n in self.session_names)
        )

    @classmethod
    def no_trim(cls, **kw) -> "TrimPolicy":
        return cls(TrimVariant.NO_TRIM, **kw)

    @classmethod
    def origin(cls, **kw) -> "TrimPolicy":
        return cls(TrimVariant.ORIGIN_TRIM, **kw)

    @classmethod
    def base(cls, **kw) -> "TrimPolicy":
        return cls(TrimVariant.BASE_TRIM, **kw)

    @classmethod
    def session(cls, **kw) -> "TrimPolicy":
        return cls(TrimVariant.SESSION_TRIM, **kw)

    @classmethod
    def http(cls, **kw) -> "TrimPolicy":
        return cls(TrimVariant.HTTP_TRIM, **kw)

    @classmethod
    def from_name(cls, name: str, origin_names=None, session_names=None) -> "TrimPolicy":
        """Build a policy from a variant name such as ``"BaseTrim"`` or ``"base"``."""
        wanted = name.replace("_", "").replace("-", "").lower()
        for variant in TrimVariant:
            short = variant.value.lower()
            if wanted in (short, short[: -len("trim")]):
                kw = {}
                if origin_names is not None:
                    kw["origin_names"] = frozenset(origin_names)
                if session_names is not None:
                    kw["session_names"] = frozenset(session_names)
                return cls(variant, **kw)
        raise ValueError(f"unknown trim policy {name!r}")

    @property
    def name(self) -> str:
        return self.variant.value

    def keeps(self, name: str, value: Optional[str]) -> bool:
        v = self.variant
        if v is TrimVariant.NO_TRIM:
            return True
        if v is TrimVariant.BASE_TRIM:
            return False
        if v is TrimVariant.ORIGIN_TRIM:
            return unquote(name).lower() not in self.origin_names
        if v is TrimVariant.SESSION_TRIM:
            return unquote(name).lower() not in self.session_names
        return not mentions_uri(value)


ALL_POLICIES = (
    TrimPolicy.no_trim(),
    TrimPolicy.origin(),
    TrimPolicy.base(),
    TrimPolicy.session(),
    TrimPolicy.http(),
)


def trim(uri: NormalizedUri, policy: TrimPolicy) -> NormalizedUri:
    """Remove the query parameters ``policy`` selects; scheme, authority and path are untouched."""
    if policy.variant is TrimVariant.NO_TRIM:
        return uri
    return uri.with_params(p for p in uri.params if policy.keeps(*p))


@dataclass(frozen=True)
class DedupKey:
    policy: TrimPolicy
    key: str

    def __str__(self) -> str:
        return self.key


def dedup_key(uri: NormalizedUri, policy: TrimPolicy) -> DedupKey:
    return DedupKey(policy, str(trim(uri, policy)))

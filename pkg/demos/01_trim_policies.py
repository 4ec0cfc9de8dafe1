"""How the trim policies decide which URIs count as "the same".

Each policy strips a different set of query parameters before two URIs are
compared.  The second half builds a small crawl log where some repeats carry
the same body and some do not, and shows how well each policy's URI
duplicates agree with the bodies that were actually duplicated.
"""
import hashlib

from tiercrawl.frontier import duplicate_report
from tiercrawl.records import STATIC, FetchRecord
from tiercrawl.uri_norm import ALL_POLICIES, parse, trim

URIS = [
    "http://example.com/folder/index.html?callback=cs.odu.edu",
    "http://example.com/folder/index.html?param=value&sessionid=12345",
    "http://example.com/folder/index.html?param=value&httpParam=http://www.test.com/",
    "http://example.com/folder/index.html?param=value",
]

print("trimmed forms")
for raw in URIS:
    print(f"\n  {raw}")
    for policy in ALL_POLICIES:
        print(f"    {policy.name:<12} {trim(parse(raw), policy)}")


def body(text):
    return hashlib.md5(text.encode()).hexdigest()


# The same image served under a session id, an ad callback and a page number.
# Only the page number changes the bytes.
log = [
    ("http://cdn.example.com/a.png?sessionid=1", "a"),
    ("http://cdn.example.com/a.png?sessionid=2", "a"),
    ("http://cdn.example.com/a.png?callback=ads.example.net", "a"),
    ("http://cdn.example.com/list?page=1", "list-1"),
    ("http://cdn.example.com/list?page=2", "list-2"),
    ("http://cdn.example.com/list?page=2&jsessionid=9", "list-2"),
    ("http://cdn.example.com/go?u=http://www.test.com/", "redirect"),
    ("http://cdn.example.com/go?u=http://www.other.com/", "redirect"),
]
records = [FetchRecord(parse(u), STATIC, 200, body(b)) for u, b in log]

print("\nduplicate URIs vs duplicate bodies over", len(records), "fetches")
print(f"  {'policy':<12} {'URI dups':>8} {'also same body':>15} {'accuracy':>9}")
for policy in ALL_POLICIES:
    rep = duplicate_report(records, policy)
    print(f"  {policy.name:<12} {rep.uri_duplicates:8d} {rep.uri_and_entity_duplicates:15d} {rep.accuracy:9.2f}")
print("\nBaseTrim drops every parameter, so it also merges the two list pages whose bodies differ.")

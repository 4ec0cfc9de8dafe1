"""Registrable-domain lookup used for same/different-domain decisions."""
from __future__ import annotations

import ipaddress
from functools import lru_cache

from publicsuffixlist import PublicSuffixList

_psl = PublicSuffixList()


@lru_cache(maxsize=4096)
def registrable_domain(host: str) -> str:
    """Return the public-suffix-aware registrable domain of ``host``.

    IP literals and single-label hosts (``localhost``) are their own domain.
    """
    host = host.lower().strip("[]").rstrip(".")
    try:
        ipaddress.ip_address(host)
        return host
    except ValueError:
        pass
    return _psl.privatesuffix(host) or host


def same_domain(host_a: str, host_b: str) -> bool:
    return registrable_domain(host_a) == registrable_domain(host_b)

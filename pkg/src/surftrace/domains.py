"""Registrable-domain (eTLD+1) helpers backed by a public-suffix rule list.

First-party / third-party decisions compare registrable domains, not raw
hosts: ``cdn.shop.example.co.uk`` and ``shop.example.co.uk`` are the same
party, while ``a.co.uk`` and ``b.co.uk`` are not.
"""

from __future__ import annotations

import ipaddress
from functools import lru_cache
from importlib import resources
from typing import Iterable
from urllib.parse import urlsplit

__all__ = [
    "SuffixRules",
    "default_rules",
    "public_suffix",
    "registrable_domain",
    "url_host",
    "url_registrable_domain",
]

_RULES_RESOURCE = "public_suffixes.dat"


class SuffixRules:
    """Public-suffix matcher with standard rule semantics.

    The longest matching rule wins, ``*`` matches exactly one label, and
    ``!`` exception rules override wildcards. A host whose TLD has no rule
    falls back to "the last label is the public suffix".
    """

    def __init__(self, rules: Iterable[str]):
        self._plain: set[tuple[str, ...]] = set()
        self._exceptions: set[tuple[str, ...]] = set()
        self._max_labels = 1
        for rule in rules:
            rule = rule.strip().lower()
            if not rule or rule.startswith("#"):
                continue
            if rule.startswith("!"):
                target, labels = self._exceptions, rule[1:]
            else:
                target, labels = self._plain, rule
            parts = tuple(reversed(labels.strip(".").split(".")))
            if parts and all(parts):
                target.add(parts)
                self._max_labels = max(self._max_labels, len(parts))

    @classmethod
    def from_file(cls, path) -> "SuffixRules":
        with open(path, encoding="utf-8") as fh:
            return cls(fh)

    @staticmethod
    def _matches(rule: tuple[str, ...], labels: tuple[str, ...]) -> bool:
        if len(rule) > len(labels):
            return False
        return all(r == "*" or r == l for r, l in zip(rule, labels))

    def public_suffix_labels(self, host: str) -> int:
        """Number of trailing labels of ``host`` that form its public suffix."""
        labels = tuple(reversed(host.split(".")))
        for exc in self._exceptions:
            if self._matches(exc, labels):
                return len(exc) - 1
        best = 1  # implicit "*" default rule
        for rule in self._plain:
            if len(rule) > best and self._matches(rule, labels):
                best = len(rule)
        return best

    def public_suffix(self, host: str) -> str:
        host = _normalize_host(host)
        if _is_ip(host):
            return host
        n = self.public_suffix_labels(host)
        return ".".join(host.split(".")[-n:])

    def registrable_domain(self, host: str) -> str:
        """Public suffix plus one label.

        Degenerate hosts (IP literals, bare suffixes, single labels) are
        returned unchanged so that same-party comparisons stay meaningful.
        """
        host = _normalize_host(host)
        if _is_ip(host):
            return host
        parts = host.split(".")
        n = self.public_suffix_labels(host)
        if len(parts) <= n:
            return host
        return ".".join(parts[-(n + 1):])


def _normalize_host(host: str) -> str:
    return host.strip().rstrip(".").lower()


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host.strip("[]"))
    except ValueError:
        return False
    return True


@lru_cache(maxsize=1)
def default_rules() -> SuffixRules:
    text = resources.files(__package__).joinpath("data", _RULES_RESOURCE).read_text("utf-8")
    return SuffixRules(text.splitlines())


def public_suffix(host: str, rules: SuffixRules | None = None) -> str:
    return (rules or default_rules()).public_suffix(host)


def registrable_domain(host: str, rules: SuffixRules | None = None) -> str:
    return (rules or default_rules()).registrable_domain(host)


def url_host(url: str) -> str | None:
    """Lowercased hostname of ``url``, or None when it has no host."""
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return host.lower() if host else None


def url_registrable_domain(url: str, rules: SuffixRules | None = None) -> str | None:
    host = url_host(url)
    if host is None:
        return None
    return registrable_domain(host, rules)

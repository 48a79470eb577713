"""Recovering the ad network's inferred profile from third-party requests.

The network is identified by registrable-domain suffixes; topical tokens
are read from configured URL query parameters of matching requests. Which
parameters an ad network actually uses churns over time, so the parameter
vocabulary lives in a config file rather than in code.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from urllib.parse import parse_qs, urlsplit

from .domains import url_host, url_registrable_domain
from .events import BrowsingEvent, EventStore, Identity, RequestRecord
from .profiles import Profile, profile_from_counts
from .taxonomy import Taxonomy

__all__ = [
    "AdObservation",
    "AdParamConfig",
    "ad_observations_until",
    "ad_profile_at",
    "default_ad_config",
    "extract_ad_tokens",
    "load_ad_config",
    "third_party_requests",
]

logger = logging.getLogger(__name__)

_DEFAULT_CONFIG_RESOURCE = "ad_params.json"


@dataclass(frozen=True)
class AdParamConfig:
    """Which hosts belong to the ad network and where its topics hide."""

    network_hosts: tuple[str, ...]
    topical_params: tuple[str, ...]
    token_delimiters: str = "|,"

    def __post_init__(self):
        if not self.network_hosts:
            raise ValueError("network_hosts must be non-empty")
        object.__setattr__(
            self, "network_hosts", tuple(h.strip(".").lower() for h in self.network_hosts)
        )

    def host_matches(self, host: str) -> bool:
        host = host.rstrip(".").lower()
        return any(host == s or host.endswith("." + s) for s in self.network_hosts)

    def to_dict(self) -> dict:
        return {
            "network_hosts": list(self.network_hosts),
            "topical_params": list(self.topical_params),
            "token_delimiters": self.token_delimiters,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdParamConfig":
        return cls(
            network_hosts=tuple(data["network_hosts"]),
            topical_params=tuple(data["topical_params"]),
            token_delimiters=data.get("token_delimiters", "|,"),
        )


def load_ad_config(path) -> AdParamConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return AdParamConfig.from_dict(json.load(fh))
    except FileNotFoundError:
        raise FileNotFoundError(f"ad-network config not found: {path}") from None


@lru_cache(maxsize=1)
def default_ad_config() -> AdParamConfig:
    text = resources.files(__package__).joinpath("data", _DEFAULT_CONFIG_RESOURCE).read_text("utf-8")
    return AdParamConfig.from_dict(json.loads(text))


@dataclass(frozen=True)
class AdObservation:
    """Topical tokens recovered from one ad-network request."""

    event_index: int
    tokens: tuple[str, ...]
    source_url: str

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("an ad observation must carry at least one token")


def third_party_requests(event: BrowsingEvent) -> list[RequestRecord]:
    """Requests whose registrable domain differs from the page's."""
    page_domain = url_registrable_domain(event.url)
    return [r for r in event.requests if url_registrable_domain(r.url) != page_domain]


def extract_ad_tokens(
    req: RequestRecord,
    cfg: AdParamConfig,
    event_index: int = 0,
) -> AdObservation | None:
    """Tokens from a request's configured query parameters.

    Returns None when the host is not the ad network's or no tokens come
    out; malformed query strings degrade to "no parameters".
    """
    host = url_host(req.url)
    if host is None or not cfg.host_matches(host):
        return None
    try:
        params = parse_qs(urlsplit(req.url).query, keep_blank_values=False)
    except ValueError:
        return None
    splitter = re.compile("[" + re.escape(cfg.token_delimiters) + "]") if cfg.token_delimiters else None
    tokens: list[str] = []
    for name in cfg.topical_params:
        for value in params.get(name, []):
            pieces = splitter.split(value) if splitter else [value]
            tokens.extend(p.strip().lower() for p in pieces if p.strip())
    if not tokens:
        return None
    return AdObservation(event_index, tuple(tokens), req.url)


def ad_observations_until(
    store: EventStore,
    identity: Identity | str,
    t: float,
    cfg: AdParamConfig,
) -> list[AdObservation]:
    """Ad observations from all events with timestamp <= t, visit-indexed from 1."""
    out: list[AdObservation] = []
    for index, event in enumerate(store.events_until(identity, t), start=1):
        for req in third_party_requests(event):
            obs = extract_ad_tokens(req, cfg, event_index=index)
            if obs is not None:
                out.append(obs)
    return out


def ad_profile_at(
    store: EventStore,
    identity: Identity | str,
    t: float,
    tax: Taxonomy,
    cfg: AdParamConfig,
) -> Profile:
    """Ad-network profile pooled over all observations up to t."""
    tokens = [tok for obs in ad_observations_until(store, identity, t, cfg) for tok in obs.tokens]
    result = tax.classify_all(tokens)
    if result.dropped:
        logger.debug("ad profile: %d tokens had no category", len(result.dropped))
    return profile_from_counts(result.counts)

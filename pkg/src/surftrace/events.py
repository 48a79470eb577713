"""Hypermedia browsing events and the per-identity event store.

An event records one page visit: the URL, when and for how long it was
viewed, the keywords extracted from the page, the outbound requests the
page triggered, and any selectors (links) it carried. Events are immutable
once appended; corrections are new events, so profile computation stays a
pure fold over a time prefix.
"""

from __future__ import annotations

import json
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from operator import attrgetter
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import urlsplit

from .errors import EventOrderingError, InvalidUrlError, UnknownIdentityError
from .extraction import (
    HtmlDocument,
    Keyword,
    KeywordSource,
    RakeConfig,
    default_rake_config,
    extract_keywords,
)

__all__ = [
    "BrowsingEvent",
    "EventStore",
    "Identity",
    "RequestRecord",
    "Selector",
    "SelectorKind",
    "parse_timestamp",
    "read_events",
    "write_events",
]

EVENT_LOG_SUFFIX = ".events.jsonl"


def _require_absolute_url(url: str) -> str:
    try:
        parts = urlsplit(url)
    except ValueError as exc:
        raise InvalidUrlError(f"malformed URL: {url!r} ({exc})") from None
    if not parts.scheme or not parts.hostname:
        raise InvalidUrlError(f"URL must be absolute with a host: {url!r}")
    return url


def parse_timestamp(value) -> float:
    """Epoch seconds from a number, numeric string, or ISO-8601 string."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp()
    except ValueError:
        raise ValueError(f"unrecognized timestamp: {value!r}") from None


def format_timestamp(ts: float) -> str:
    """ISO-8601 UTC rendering used by the event log."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


@dataclass(frozen=True)
class Identity:
    """One profile the user maintains (an account, a persona, a browser)."""

    id: str
    label: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("identity id must be non-empty")

    def to_dict(self) -> dict:
        return {"id": self.id, "label": self.label}

    @classmethod
    def from_dict(cls, data: dict) -> "Identity":
        return cls(id=data["id"], label=data.get("label", ""))


class SelectorKind(str, Enum):
    HYPERLINK = "hyperlink"
    ACCOUNT_LINK = "account-link"
    SESSION_LINK = "session-link"


@dataclass(frozen=True)
class Selector:
    """A link connecting events or identities in the footprint."""

    kind: SelectorKind
    target: str

    def __post_init__(self):
        if not self.target:
            raise ValueError("selector target must be non-empty")
        try:
            urlsplit(self.target)
        except ValueError as exc:
            raise ValueError(f"selector target is not a valid URI: {exc}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "target": self.target}

    @classmethod
    def from_dict(cls, data: dict) -> "Selector":
        return cls(kind=SelectorKind(data["kind"]), target=data["target"])


@dataclass(frozen=True)
class RequestRecord:
    """One outbound request observed while a page was open."""

    url: str
    initiator_host: str

    def __post_init__(self):
        _require_absolute_url(self.url)

    def to_dict(self) -> dict:
        return {"url": self.url, "initiator_host": self.initiator_host}

    @classmethod
    def from_dict(cls, data: dict) -> "RequestRecord":
        return cls(url=data["url"], initiator_host=data.get("initiator_host", ""))


@dataclass(frozen=True)
class BrowsingEvent:
    """One page visit attached to an identity.

    Timestamps are epoch seconds (UTC), normalized to microsecond
    resolution so the ISO-8601 event log round-trips exactly.
    """

    identity: Identity
    url: str
    timestamp: float
    dwell: float
    keywords: tuple[Keyword, ...] = ()
    requests: tuple[RequestRecord, ...] = ()
    selectors: tuple[Selector, ...] = ()

    def __post_init__(self):
        _require_absolute_url(self.url)
        if self.dwell < 0:
            raise ValueError("dwell must be nonnegative")
        object.__setattr__(self, "timestamp", round(float(self.timestamp), 6))
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "selectors", tuple(self.selectors))

    def to_dict(self) -> dict:
        return {
            "identity": self.identity.to_dict(),
            "url": self.url,
            "timestamp": format_timestamp(self.timestamp),
            "dwell": self.dwell,
            "keywords": [{"term": k.term, "source": k.source.value} for k in self.keywords],
            "requests": [r.to_dict() for r in self.requests],
            "selectors": [s.to_dict() for s in self.selectors],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BrowsingEvent":
        return cls(
            identity=Identity.from_dict(data["identity"]),
            url=data["url"],
            timestamp=parse_timestamp(data["timestamp"]),
            dwell=float(data["dwell"]),
            keywords=tuple(
                Keyword(k["term"], KeywordSource(k["source"])) for k in data.get("keywords", [])
            ),
            requests=tuple(RequestRecord.from_dict(r) for r in data.get("requests", [])),
            selectors=tuple(Selector.from_dict(s) for s in data.get("selectors", [])),
        )


class EventStore:
    """Ordered, append-only event sequences keyed by identity.

    One writer per identity with any number of concurrent readers: appends
    take the store lock, reads return immutable snapshots, and events
    themselves are frozen values safe to share across threads.
    """

    def __init__(self, rake_config: RakeConfig | None = None):
        self._rake_config = rake_config or default_rake_config()
        self._identities: dict[str, Identity] = {}
        self._events: dict[str, list[BrowsingEvent]] = {}
        self._lock = threading.Lock()

    @property
    def rake_config(self) -> RakeConfig:
        return self._rake_config

    @staticmethod
    def _id_of(identity: Identity | str) -> str:
        return identity.id if isinstance(identity, Identity) else identity

    def identities(self) -> tuple[Identity, ...]:
        with self._lock:
            return tuple(self._identities.values())

    def new_event(
        self,
        identity: Identity,
        url: str,
        timestamp: float,
        dwell: float,
        page: HtmlDocument | None,
        requests: Iterable[RequestRecord] = (),
        selectors: Iterable[Selector] = (),
    ) -> BrowsingEvent:
        """Extract keywords from ``page`` and append the resulting event.

        ``page`` may be None for visits whose content was not retrievable;
        such events carry no keywords.
        """
        keywords = extract_keywords(page, self._rake_config) if page is not None else []
        event = BrowsingEvent(
            identity=identity,
            url=url,
            timestamp=timestamp,
            dwell=dwell,
            keywords=tuple(keywords),
            requests=tuple(requests),
            selectors=tuple(selectors),
        )
        self.append(event)
        return event

    def append(self, event: BrowsingEvent) -> None:
        """Append a fully built event, enforcing per-identity time order."""
        with self._lock:
            ident = event.identity
            sequence = self._events.setdefault(ident.id, [])
            self._identities.setdefault(ident.id, ident)
            if sequence and event.timestamp <= sequence[-1].timestamp:
                raise EventOrderingError(
                    f"timestamp {event.timestamp} does not follow "
                    f"{sequence[-1].timestamp} for identity {ident.id!r}"
                )
            sequence.append(event)

    def _sequence(self, identity: Identity | str) -> list[BrowsingEvent]:
        key = self._id_of(identity)
        try:
            return self._events[key]
        except KeyError:
            raise UnknownIdentityError(key) from None

    def events(self, identity: Identity | str) -> tuple[BrowsingEvent, ...]:
        with self._lock:
            return tuple(self._sequence(identity))

    def events_until(self, identity: Identity | str, t: float) -> tuple[BrowsingEvent, ...]:
        """All events with timestamp <= t, in ascending order."""
        with self._lock:
            sequence = self._sequence(identity)
            cut = bisect_right(sequence, t, key=attrgetter("timestamp"))
            return tuple(sequence[:cut])

    def all_events(self) -> Iterator[BrowsingEvent]:
        """Events of every identity, grouped by identity id."""
        with self._lock:
            snapshot = {key: tuple(seq) for key, seq in self._events.items()}
        for key in sorted(snapshot):
            yield from snapshot[key]


def write_events(store: EventStore, path) -> None:
    """Persist a store as newline-delimited JSON, one event per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for event in store.all_events():
            fh.write(json.dumps(event.to_dict(), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def read_events(path, rake_config: RakeConfig | None = None) -> EventStore:
    """Load an event log written by :func:`write_events`."""
    path = Path(path)
    store = EventStore(rake_config)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                store.append(BrowsingEvent.from_dict(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad event record ({exc})") from exc
    return store

"""HTTP Archive (HAR 1.x) ingestion.

A HAR capture supplies what static fetching cannot: the requests a real
browser actually issued while a page was open. Each page becomes one event
skeleton carrying its grouped requests and, when the archive includes it,
the page's HTML body.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .domains import registrable_domain, url_host
from .errors import HarFormatError, HarVersionError
from .events import EventStore, Identity, RequestRecord, parse_timestamp
from .extraction import HtmlDocument, RakeConfig

__all__ = [
    "EventSkeleton",
    "HarCapture",
    "HarEntry",
    "HarPage",
    "events_from_har",
    "ingest_har",
    "load_har",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarPage:
    id: str
    url: str
    timestamp: float


@dataclass(frozen=True)
class HarEntry:
    url: str
    page_url: str | None  # None marks an orphan entry
    timestamp: float


@dataclass(frozen=True)
class HarCapture:
    pages: tuple[HarPage, ...]
    entries: tuple[HarEntry, ...]


@dataclass(frozen=True)
class EventSkeleton:
    """One page visit recovered from a HAR: everything but the identity."""

    url: str
    timestamp: float
    html: str | None
    requests: tuple[RequestRecord, ...]


def _field(obj, key, path):
    if not isinstance(obj, dict) or key not in obj:
        raise HarFormatError(f"missing field at {path}.{key}")
    return obj[key]


def _iso_to_epoch(value, path) -> float:
    try:
        return parse_timestamp(value)
    except ValueError:
        raise HarFormatError(f"bad timestamp at {path}: {value!r}") from None


def _entry_html(entry: dict) -> str | None:
    content = entry.get("response", {}).get("content", {})
    mime = (content.get("mimeType") or "").lower()
    text = content.get("text")
    if not text or "html" not in mime:
        return None
    if content.get("encoding") == "base64":
        try:
            return base64.b64decode(text).decode("utf-8", errors="replace")
        except (ValueError, TypeError):
            return None
    return text


def load_har(path) -> tuple[HarCapture, dict]:
    """Parse a HAR file into a capture summary plus the raw per-page data.

    The returned dict maps page id to ``(page_dict, [entry_dicts])`` for
    skeleton building.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"HAR file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise HarFormatError(f"not valid JSON: {exc}") from None

    log = _field(data, "log", "$")
    version = str(_field(log, "version", "$.log"))
    if not version.startswith("1."):
        raise HarVersionError(f"unsupported HAR version {version!r} (need 1.x)")

    raw_pages = log.get("pages", [])
    raw_entries = log.get("entries", [])
    if not isinstance(raw_pages, list):
        raise HarFormatError("$.log.pages must be a list")
    if not isinstance(raw_entries, list):
        raise HarFormatError("$.log.entries must be a list")

    grouped: dict[str, list[dict]] = {}
    page_meta: dict[str, tuple[dict, float]] = {}
    pages: list[HarPage] = []
    for i, page in enumerate(raw_pages):
        ppath = f"$.log.pages[{i}]"
        pid = str(_field(page, "id", ppath))
        ts = _iso_to_epoch(_field(page, "startedDateTime", ppath), f"{ppath}.startedDateTime")
        page_meta[pid] = (page, ts)
        grouped[pid] = []

    entries: list[HarEntry] = []
    for i, entry in enumerate(raw_entries):
        epath = f"$.log.entries[{i}]"
        request = _field(entry, "request", epath)
        url = _field(request, "url", f"{epath}.request")
        ts = _iso_to_epoch(
            _field(entry, "startedDateTime", epath), f"{epath}.startedDateTime"
        )
        pageref = entry.get("pageref")
        if pageref in grouped:
            grouped[pageref].append(entry)
            page_url: str | None = pageref  # resolved to a URL below
        else:
            page_url = None
        entries.append(HarEntry(url=url, page_url=page_url, timestamp=ts))

    # Resolve page URLs: the first grouped entry is the document request.
    page_urls: dict[str, str] = {}
    for pid, page_entries in grouped.items():
        if page_entries:
            page_urls[pid] = page_entries[0]["request"]["url"]
    for pid, (_, ts) in page_meta.items():
        if pid in page_urls:
            pages.append(HarPage(id=pid, url=page_urls[pid], timestamp=ts))
        else:
            logger.warning("HAR page %r has no entries; skipped", pid)
    entries = [
        HarEntry(e.url, page_urls.get(e.page_url), e.timestamp) if e.page_url else e
        for e in entries
    ]
    return HarCapture(tuple(pages), tuple(entries)), {
        pid: (page_meta[pid][0], grouped[pid]) for pid in grouped
    }


def ingest_har(path) -> list[EventSkeleton]:
    """One skeleton per page, with its requests attached by initiator.

    Every entry grouped under a page (the document fetch included) becomes
    a request record; the page HTML is taken from the document entry's
    response body when the archive carries one.
    """
    capture, grouped = load_har(path)
    skeletons: list[EventSkeleton] = []
    for page in capture.pages:
        _, page_entries = grouped[page.id]
        page_host = url_host(page.url)
        initiator = registrable_domain(page_host) if page_host else ""
        requests: list[RequestRecord] = []
        for entry in page_entries:
            url = entry["request"]["url"]
            if url_host(url) is None:
                logger.debug("skipping hostless request URL %r", url)
                continue
            requests.append(RequestRecord(url=url, initiator_host=initiator))
        html = _entry_html(page_entries[0]) if page_entries else None
        skeletons.append(
            EventSkeleton(
                url=page.url,
                timestamp=page.timestamp,
                html=html,
                requests=tuple(requests),
            )
        )
    return skeletons


def events_from_har(
    path,
    identity: Identity,
    store: EventStore | None = None,
    rake_config: RakeConfig | None = None,
) -> EventStore:
    """Build full browsing events from a HAR, ordered by page start time."""
    store = store or EventStore(rake_config)
    for skeleton in sorted(ingest_har(path), key=lambda s: s.timestamp):
        page = HtmlDocument(skeleton.html, base_url=skeleton.url) if skeleton.html else None
        store.new_event(
            identity,
            skeleton.url,
            skeleton.timestamp,
            dwell=0.0,
            page=page,
            requests=skeleton.requests,
        )
    return store

"""Single-page HTTP client with static subresource discovery.

The client fetches exactly one URL per call: subresources referenced by
the HTML (images, scripts, frames, stylesheets) are discovered statically
and reported as request records, never fetched. Dynamic request capture
belongs to HAR ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass
from html.parser import HTMLParser
from urllib.parse import urljoin, urlsplit

import requests

from .domains import url_registrable_domain
from .errors import FetchError, InvalidUrlError
from .events import RequestRecord
from .extraction import HtmlDocument

__all__ = ["DEFAULT_USER_AGENT", "FetchResult", "discover_subresources", "fetch_page"]

DEFAULT_USER_AGENT = "surftrace/0.1 (research measurement tool; one page per request)"

DEFAULT_MAX_REDIRECTS = 5

# (tag, attribute) pairs that reference an external subresource.
_SUBRESOURCE_ATTRS = {
    ("img", "src"),
    ("script", "src"),
    ("iframe", "src"),
    ("frame", "src"),
    ("embed", "src"),
    ("source", "src"),
    ("audio", "src"),
    ("video", "src"),
    ("video", "poster"),
    ("link", "href"),
    ("input", "src"),
    ("object", "data"),
}


class _SubresourceParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.refs: list[str] = []

    def handle_starttag(self, tag, attrs):
        for name, value in attrs:
            if value and (tag, name) in _SUBRESOURCE_ATTRS:
                self.refs.append(value)


def discover_subresources(doc: HtmlDocument) -> list[str]:
    """Absolute http(s) subresource URLs, resolved against the base URL."""
    parser = _SubresourceParser()
    parser.feed(doc.raw)
    parser.close()
    out: list[str] = []
    seen: set[str] = set()
    for ref in parser.refs:
        absolute = urljoin(doc.base_url, ref.strip())
        parts = urlsplit(absolute)
        if parts.scheme in ("http", "https") and parts.hostname and absolute not in seen:
            seen.add(absolute)
            out.append(absolute)
    return out


@dataclass(frozen=True)
class FetchResult:
    document: HtmlDocument | None  # None when the response body was empty
    requests: tuple[RequestRecord, ...]
    status: int
    url: str  # final URL after redirects


def fetch_page(
    url: str,
    *,
    timeout: float = 10.0,
    user_agent: str = DEFAULT_USER_AGENT,
    max_redirects: int = DEFAULT_MAX_REDIRECTS,
    session: requests.Session | None = None,
) -> FetchResult:
    """Fetch one page and statically discover its subresource URLs.

    Raises :class:`FetchError` on timeouts, DNS failures, non-2xx statuses,
    or more than ``max_redirects`` redirects; never fetches subresources.
    """
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.hostname:
        raise InvalidUrlError(f"fetch needs an absolute http(s) URL, got {url!r}")

    owns_session = session is None
    session = session or requests.Session()
    session.max_redirects = max_redirects
    try:
        response = session.get(
            url,
            timeout=timeout,
            headers={"User-Agent": user_agent},
            allow_redirects=True,
        )
    except requests.TooManyRedirects:
        raise FetchError(f"more than {max_redirects} redirects for {url}", url=url) from None
    except requests.RequestException as exc:
        raise FetchError(f"fetch failed for {url}: {exc}", url=url) from exc
    finally:
        if owns_session:
            session.close()

    if not 200 <= response.status_code < 300:
        raise FetchError(
            f"fetch of {url} returned status {response.status_code}",
            url=url,
            status=response.status_code,
        )

    final_url = response.url
    body = response.text or ""
    if not body.strip():
        return FetchResult(None, (), response.status_code, final_url)

    document = HtmlDocument(body, base_url=final_url)
    initiator = url_registrable_domain(final_url) or ""
    records = tuple(
        RequestRecord(url=sub, initiator_host=initiator)
        for sub in discover_subresources(document)
    )
    return FetchResult(document, records, response.status_code, final_url)

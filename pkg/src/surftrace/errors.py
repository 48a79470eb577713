"""Exception types shared across the package.

Most errors double as ``ValueError`` so callers that do not care about the
fine-grained type can still catch the obvious thing.
"""

from __future__ import annotations


class SurftraceError(Exception):
    """Base class for all package-specific errors."""


class InvalidUrlError(SurftraceError, ValueError):
    """A URL was not an absolute URI with a host component."""


class EventOrderingError(SurftraceError, ValueError):
    """An event timestamp did not strictly increase within an identity."""


class UnknownIdentityError(SurftraceError, KeyError):
    """An identity id was not present in the event store."""


class DimensionMismatchError(SurftraceError, ValueError):
    """Two category vectors had different lengths."""


class EmptyProfileError(SurftraceError, ValueError):
    """A distance was requested against a profile with no support."""


class TaxonomyFormatError(SurftraceError, ValueError):
    """A taxonomy file violated the expected TSV layout."""


class HarFormatError(SurftraceError, ValueError):
    """A HAR document was structurally invalid; the message names the JSON path."""


class HarVersionError(HarFormatError):
    """A HAR document declared an unsupported version."""


class FetchError(SurftraceError):
    """A live page fetch failed (timeout, DNS, non-2xx, redirect loop)."""

    def __init__(self, message: str, *, url: str = "", status: int | None = None):
        super().__init__(message)
        self.url = url
        self.status = status

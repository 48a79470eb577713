"""Interest profiles: normalized keyword histograms over categories.

Both sides of the measurement use the same representation: the user's
profile is built from keywords of the pages they visited, the ad network's
profile from topical tokens recovered from its request URLs. A profile
with no support is an explicit empty state, never a silent uniform prior,
because distances against it are undefined.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import DimensionMismatchError
from .events import EventStore, Identity
from .taxonomy import CategoryCounts, Taxonomy

__all__ = [
    "Profile",
    "accumulate",
    "profile_from_counts",
    "user_profile_at",
]

logger = logging.getLogger(__name__)

_NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Profile:
    """A PMF over interest categories plus the total count it came from."""

    pmf: tuple[float, ...]
    support_count: int

    def __post_init__(self):
        if self.support_count < 0:
            raise ValueError("support_count must be nonnegative")
        if any(p < 0 for p in self.pmf):
            raise ValueError("pmf entries must be nonnegative")
        if self.support_count == 0:
            if any(p != 0 for p in self.pmf):
                raise ValueError("an empty profile must have an all-zero pmf")
        elif abs(sum(self.pmf) - 1.0) > _NORMALIZATION_TOLERANCE:
            raise ValueError("pmf entries must sum to 1")

    @property
    def is_empty(self) -> bool:
        return self.support_count == 0

    def __len__(self) -> int:
        return len(self.pmf)

    def to_dict(self, categories) -> dict:
        return {
            "categories": list(categories),
            "pmf": list(self.pmf),
            "support_count": self.support_count,
        }


def profile_from_counts(counts: CategoryCounts) -> Profile:
    """Normalize counts into a PMF; all-zero counts give the empty profile."""
    total = counts.total
    if total == 0:
        return Profile((0.0,) * len(counts), 0)
    return Profile(tuple(c / total for c in counts.counts), total)


def accumulate(counts: CategoryCounts, event_counts: CategoryCounts) -> CategoryCounts:
    """Element-wise sum of two count vectors of equal length."""
    if len(counts) != len(event_counts):
        raise DimensionMismatchError(
            f"cannot add counts of length {len(counts)} and {len(event_counts)}"
        )
    return CategoryCounts(tuple(a + b for a, b in zip(counts.counts, event_counts.counts)))


def user_profile_at(
    store: EventStore,
    identity: Identity | str,
    t: float,
    tax: Taxonomy,
) -> Profile:
    """User profile from all events with timestamp <= t.

    Every extracted keyword counts once per event; dwell time and keyword
    source carry no weight.
    """
    total = CategoryCounts.zeros(tax.size)
    dropped = 0
    for event in store.events_until(identity, t):
        result = tax.classify_all([k.term for k in event.keywords])
        total = accumulate(total, result.counts)
        dropped += len(result.dropped)
    if dropped:
        logger.debug("user profile: %d keywords had no category", dropped)
    return profile_from_counts(total)

"""Mapping keyword terms to top-level interest categories.

A taxonomy is a flat, pluggable lookup table loaded from a TSV file; a
small demo taxonomy with 13 classic directory-style top levels ships with
the package for tests and examples.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from functools import cached_property, lru_cache
from importlib import resources

from .errors import TaxonomyFormatError
from .extraction import _WORD_RE

__all__ = [
    "CategoryCounts",
    "ClassifyResult",
    "Taxonomy",
    "demo_taxonomy",
    "load_taxonomy",
]

logger = logging.getLogger(__name__)

_DEMO_RESOURCE = "taxonomy_demo.tsv"


@dataclass(frozen=True)
class CategoryCounts:
    """Keyword tallies over a taxonomy's categories."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("category counts must be nonnegative")

    @classmethod
    def zeros(cls, size: int) -> "CategoryCounts":
        return cls((0,) * size)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class ClassifyResult:
    counts: CategoryCounts
    dropped: tuple[str, ...]


def _normalize_term(term: str) -> str:
    return " ".join(term.lower().split())


@dataclass(frozen=True)
class Taxonomy:
    """Ordered category list plus a term-to-category index.

    Immutable after construction; lookups are read-only and safe to share
    across threads.
    """

    categories: tuple[str, ...]
    index: dict[str, int]

    def __post_init__(self):
        if not self.categories:
            raise TaxonomyFormatError("taxonomy must define at least one category")
        if len(set(self.categories)) != len(self.categories):
            raise TaxonomyFormatError("category names must be unique")
        for term, cid in self.index.items():
            if not 0 <= cid < len(self.categories):
                raise TaxonomyFormatError(f"term {term!r} maps to unknown category id {cid}")

    @property
    def size(self) -> int:
        return len(self.categories)

    @cached_property
    def _representatives(self) -> dict[int, str]:
        reps: dict[int, str] = {}
        for term, cid in self.index.items():
            reps.setdefault(cid, term)
        return reps

    def representative_term(self, category_id: int) -> str:
        """First indexed term of a category (used by the mock ad server)."""
        try:
            return self._representatives[category_id]
        except KeyError:
            name = self.categories[category_id]
            raise ValueError(f"category {name!r} has no indexed terms") from None

    def classify(self, term: str) -> int | None:
        """Category id for a term, or None.

        Exact lowercase lookup first; multi-word terms fall back to a
        majority vote over their words, ties resolved to the lowest
        category id.
        """
        normalized = _normalize_term(term)
        hit = self.index.get(normalized)
        if hit is not None:
            return hit
        words = _WORD_RE.findall(normalized)
        if len(words) < 2:
            return None
        votes = Counter(self.index[w] for w in words if w in self.index)
        if not votes:
            return None
        top = max(votes.values())
        return min(cid for cid, n in votes.items() if n == top)

    def classify_all(self, terms) -> ClassifyResult:
        """Tally classified terms per category; unmatched terms are dropped."""
        counts = [0] * self.size
        dropped: list[str] = []
        for term in terms:
            cid = self.classify(term)
            if cid is None:
                dropped.append(term)
            else:
                counts[cid] += 1
        if dropped:
            logger.debug("unclassified terms dropped: %s", dropped)
        return ClassifyResult(CategoryCounts(tuple(counts)), tuple(dropped))


def _parse_taxonomy(lines, origin: str) -> Taxonomy:
    categories: list[str] = []
    index: dict[str, int] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
            raise TaxonomyFormatError(
                f"{origin}:{lineno}: expected two tab-separated fields, got {line!r}"
            )
        first, second = fields[0].strip(), fields[1].strip()
        if first == "category":
            if second in categories:
                raise TaxonomyFormatError(f"{origin}:{lineno}: duplicate category {second!r}")
            categories.append(second)
        else:
            term = _normalize_term(first)
            if term in index:
                raise TaxonomyFormatError(
                    f"{origin}:{lineno}: term {term!r} is already mapped to "
                    f"{categories[index[term]]!r}"
                )
            try:
                cid = categories.index(second)
            except ValueError:
                raise TaxonomyFormatError(
                    f"{origin}:{lineno}: unknown category {second!r} for term {term!r}"
                ) from None
            index[term] = cid
    if not categories:
        raise TaxonomyFormatError(f"{origin}: no categories defined")
    return Taxonomy(tuple(categories), index)


def load_taxonomy(path) -> Taxonomy:
    """Load a taxonomy TSV: a `category<TAB>name` block, then `term<TAB>name` rows."""
    try:
        with open(path, encoding="utf-8") as fh:
            return _parse_taxonomy(fh, str(path))
    except FileNotFoundError:
        raise FileNotFoundError(f"taxonomy file not found: {path}") from None


@lru_cache(maxsize=1)
def demo_taxonomy() -> Taxonomy:
    text = resources.files(__package__).joinpath("data", _DEMO_RESOURCE).read_text("utf-8")
    return _parse_taxonomy(text.splitlines(), _DEMO_RESOURCE)

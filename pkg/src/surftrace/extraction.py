"""Keyword extraction from HTML pages.

Two complementary sources feed interest profiles:

* explicit page metadata: the ``keywords`` and ``description`` meta tags
  plus the title, and
* an unsupervised degree/frequency keyword extractor run over the visible
  body text.

The extractor scores candidate phrases as follows. Text is split into
candidates at stopwords, phrase delimiters, and sentence boundaries; runs
longer than ``max_phrase_words`` are discarded. For every content word
``w``, ``freq(w)`` counts its occurrences across candidates and ``deg(w)``
adds, for each candidate containing ``w``, the candidate's length minus
one, plus ``freq(w)`` itself. A word scores ``deg(w)/freq(w)`` and a phrase
scores the sum of its word scores.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from html.parser import HTMLParser
from importlib import resources

__all__ = [
    "HtmlDocument",
    "Keyword",
    "KeywordSource",
    "RakeConfig",
    "ScoredKeyword",
    "default_rake_config",
    "default_stoplist",
    "extract_keywords",
    "extract_meta_keywords",
    "load_stoplist",
    "rake_candidates",
    "rake_scores",
    "visible_text",
]

# Word tokens: unicode alphanumerics, apostrophes allowed word-internally.
_WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")

# Default phrase delimiters: ASCII punctuation except the apostrophe.
_DEFAULT_DELIMITERS = frozenset(string.punctuation) - {"'"}

# Sentence boundaries always split candidates, whatever the config says.
_SENTENCE_BREAKS = frozenset({".", "!", "?", "\n", "\r"})

_STOPLIST_RESOURCE = "stopwords_en.txt"

# Content inside these elements is never part of the visible text.
_SKIP_TAGS = frozenset({"script", "style", "nav", "noscript", "template"})

# Elements rendered as blocks: their boundaries end the running sentence.
_BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "br", "caption", "div",
    "dd", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form",
    "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "ol",
    "option", "p", "pre", "section", "select", "table", "tbody", "td",
    "tfoot", "th", "thead", "tr", "ul",
})


@dataclass(frozen=True)
class HtmlDocument:
    """Raw HTML plus the URL it was retrieved from (used to resolve links)."""

    raw: str
    base_url: str = ""

    def __post_init__(self):
        if not self.raw:
            raise ValueError("HtmlDocument.raw must be non-empty")


class KeywordSource(str, Enum):
    META = "meta"
    BODY = "body"


@dataclass(frozen=True)
class Keyword:
    term: str
    source: KeywordSource


@dataclass(frozen=True)
class ScoredKeyword:
    phrase: str
    score: float


@dataclass(frozen=True)
class RakeConfig:
    """Configuration for the keyword extractor.

    ``top_fraction`` controls how much of the ranked phrase list
    ``extract_keywords`` keeps (rounded up).
    """

    stoplist: frozenset[str]
    phrase_delimiters: frozenset[str] = _DEFAULT_DELIMITERS
    min_word_chars: int = 1
    max_phrase_words: int = 3
    top_fraction: float = 1 / 3

    def __post_init__(self):
        if not self.stoplist:
            raise ValueError("stoplist must be non-empty")
        if self.min_word_chars < 1:
            raise ValueError("min_word_chars must be >= 1")
        if self.max_phrase_words < 1:
            raise ValueError("max_phrase_words must be >= 1")
        if not 0 < self.top_fraction <= 1:
            raise ValueError("top_fraction must be in (0, 1]")


def load_stoplist(path) -> frozenset[str]:
    """Load a stoplist file: one lowercase word per line, '#' comments."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word.lower())
    return frozenset(words)


@lru_cache(maxsize=1)
def default_stoplist() -> frozenset[str]:
    text = resources.files(__package__).joinpath("data", _STOPLIST_RESOURCE).read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=1)
def default_rake_config() -> RakeConfig:
    return RakeConfig(stoplist=default_stoplist())


class _PageParser(HTMLParser):
    """Single-pass collector for meta entries and visible text.

    ``meta_entries`` holds ("keywords" | "description" | "title", content)
    tuples in document order. Visible text excludes anything inside
    script/style/nav/noscript and the document head; block-element
    boundaries become newlines so they later act as sentence breaks.
    """

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.meta_entries: list[tuple[str, str]] = []
        self.text_parts: list[str] = []
        self._skip_depth = 0
        self._head_depth = 0
        self._title_slot: int | None = None
        self._title_parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag == "head":
            self._head_depth += 1
        elif tag == "title":
            self._title_slot = len(self.meta_entries)
            self.meta_entries.append(("title", ""))
            self._title_parts = []
        elif tag == "meta":
            d = dict(attrs)
            name = (d.get("name") or "").strip().lower()
            if name in ("keywords", "description"):
                self.meta_entries.append((name, d.get("content") or ""))
        if tag in _BLOCK_TAGS:
            self.text_parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "head":
            self._head_depth = max(0, self._head_depth - 1)
        elif tag == "title" and self._title_slot is not None:
            self.meta_entries[self._title_slot] = ("title", "".join(self._title_parts))
            self._title_slot = None
        if tag in _BLOCK_TAGS:
            self.text_parts.append("\n")

    def handle_data(self, data):
        if self._title_slot is not None:
            self._title_parts.append(data)
        elif not self._skip_depth and not self._head_depth:
            self.text_parts.append(data)


def _parse_page(doc: HtmlDocument) -> _PageParser:
    parser = _PageParser()
    parser.feed(doc.raw)
    parser.close()
    return parser


def _words(text: str) -> list[str]:
    """Lowercase word tokens; number-only tokens are dropped."""
    return [m.group(0).lower() for m in _WORD_RE.finditer(text) if not m.group(0).isdigit()]


def _meta_terms(parsed: _PageParser) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for kind, content in parsed.meta_entries:
        if kind == "keywords":
            terms = [re.sub(r"\s+", " ", t).strip().lower() for t in content.split(",")]
            terms = [t for t in terms if t]
        else:
            terms = _words(content)
        for term in terms:
            if term not in seen:
                seen.add(term)
                out.append(term)
    return out


def _visible_text(parsed: _PageParser) -> str:
    joined = "".join(parsed.text_parts)
    lines = (re.sub(r"\s+", " ", line).strip() for line in joined.split("\n"))
    return "\n".join(line for line in lines if line)


def extract_meta_keywords(doc: HtmlDocument) -> list[str]:
    """Terms from the keywords meta tag plus description and title words.

    Comma-separated keyword entries keep inner spaces; description and
    title are tokenized into single words. Everything is lowercased and
    deduplicated, first occurrence (in document order) wins. Broken HTML
    degrades to a best-effort parse, never an error.
    """
    return _meta_terms(_parse_page(doc))


def visible_text(doc: HtmlDocument) -> str:
    """Rendered text of the page body, one line per block element."""
    return _visible_text(_parse_page(doc))


def _is_content_word(word: str, cfg: RakeConfig) -> bool:
    return (
        len(word) >= cfg.min_word_chars
        and not word.isdigit()
        and word not in cfg.stoplist
    )


def rake_candidates(text: str, cfg: RakeConfig) -> list[str]:
    """Candidate phrases in text order.

    Stopwords, phrase delimiters, and sentence boundaries split the text;
    each maximal run of content words no longer than ``max_phrase_words``
    becomes one candidate (longer runs are discarded, as are number-only
    tokens and words shorter than ``min_word_chars``).
    """
    splitters = "".join(sorted(set(cfg.phrase_delimiters) | _SENTENCE_BREAKS))
    fragment_re = re.compile("[" + re.escape(splitters) + "]")
    candidates: list[str] = []

    def flush(run: list[str]):
        if run and len(run) <= cfg.max_phrase_words:
            candidates.append(" ".join(run))

    for fragment in fragment_re.split(text.lower()):
        run: list[str] = []
        for word in _WORD_RE.findall(fragment):
            if _is_content_word(word, cfg):
                run.append(word)
            else:
                flush(run)
                run = []
        flush(run)
    return candidates


def rake_scores(candidates: list[str]) -> list[ScoredKeyword]:
    """Score candidates by summed word degree/frequency ratios.

    Duplicate phrases are merged; the result is sorted by score descending,
    ties broken by phrase ascending.
    """
    phrases = [c.split(" ") for c in candidates]
    freq = Counter(word for phrase in phrases for word in phrase)
    spread: dict[str, int] = dict.fromkeys(freq, 0)
    for phrase in phrases:
        bonus = len(phrase) - 1
        for word in set(phrase):
            spread[word] += bonus
    word_score = {w: (spread[w] + freq[w]) / freq[w] for w in freq}

    merged: dict[str, float] = {}
    for candidate, phrase in zip(candidates, phrases):
        if candidate not in merged:
            merged[candidate] = sum(word_score[w] for w in phrase)
    ranked = sorted(merged.items(), key=lambda item: (-item[1], item[0]))
    return [ScoredKeyword(phrase, score) for phrase, score in ranked]


def extract_keywords(doc: HtmlDocument, cfg: RakeConfig | None = None) -> list[Keyword]:
    """Meta terms plus the top slice of body keywords.

    Body keywords are the top ``ceil(top_fraction * n)`` scored phrases
    from the visible text. Deduplication is case-insensitive and meta
    terms win collisions.
    """
    cfg = cfg or default_rake_config()
    parsed = _parse_page(doc)
    meta = _meta_terms(parsed)
    scored = rake_scores(rake_candidates(_visible_text(parsed), cfg))
    keep = math.ceil(cfg.top_fraction * len(scored))

    taken = set(meta)
    out = [Keyword(term, KeywordSource.META) for term in meta]
    for entry in scored[:keep]:
        if entry.phrase not in taken:
            taken.add(entry.phrase)
            out.append(Keyword(entry.phrase, KeywordSource.BODY))
    return out

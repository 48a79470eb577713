"""Session replay against a configurable mock ad server.

The mock server stands in for a live advertising network: it accumulates
the interest counts it observes (optionally delayed by a visit lag) and
serves topical ad tokens back. Served tokens are attached to the event as
a genuine third-party request URL, so the ad profile is recovered through
the same parameter-extraction path as real captures.

Two serving modes exist:

* ``sampled`` draws ``ads_per_visit`` category labels i.i.d. from the
  server's normalized estimate (uniform over all categories while the
  estimate is empty), using the seeded generator.
* ``expected`` is the deterministic analog used to turn convergence claims
  into exact assertions: each visit it mirrors back the newly learned
  counts, so the pooled ad profile equals the user profile as the server
  saw it ``lag`` visits ago. While the estimate is still empty it emits
  one token per category (the uniform belief).
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable
from urllib.parse import urlencode

from .adnet import AdParamConfig
from .domains import url_registrable_domain
from .errors import DimensionMismatchError, FetchError
from .events import BrowsingEvent, EventStore, Identity, RequestRecord
from .extraction import HtmlDocument, RakeConfig, default_rake_config, extract_keywords
from .metrics import DistanceSeries, convergence_visits, distance_series
from .taxonomy import CategoryCounts, Taxonomy

__all__ = [
    "ConvergenceReport",
    "FetchedPage",
    "InlinePage",
    "MockAdServer",
    "ReplayResult",
    "ReplayWarning",
    "ServeMode",
    "SessionScript",
    "SessionStep",
    "SnapshotPage",
    "load_script",
    "replay",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InlinePage:
    html: str


@dataclass(frozen=True)
class SnapshotPage:
    path: str


@dataclass(frozen=True)
class FetchedPage:
    pass


PageSource = InlinePage | SnapshotPage | FetchedPage


@dataclass(frozen=True)
class SessionStep:
    url: str
    dwell: float
    source: PageSource

    def __post_init__(self):
        if self.dwell < 0:
            raise ValueError("dwell must be nonnegative")


@dataclass(frozen=True)
class SessionScript:
    """An ordered reading list replayed by the surfing agent."""

    identity: Identity
    steps: tuple[SessionStep, ...]
    start_time: float = 0.0
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a session script needs at least one step")


def _step_from_dict(data: dict) -> SessionStep:
    src = data.get("source", {"kind": "fetched"})
    kind = src.get("kind")
    if kind == "inline":
        source: PageSource = InlinePage(src["html"])
    elif kind == "snapshot":
        source = SnapshotPage(src["path"])
    elif kind == "fetched":
        source = FetchedPage()
    else:
        raise ValueError(f"unknown page source kind {kind!r}")
    return SessionStep(url=data["url"], dwell=float(data.get("dwell", 0.0)), source=source)


def load_script(path) -> SessionScript:
    """Load a session script JSON; snapshot paths resolve relative to it."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"session script not found: {path}") from None
    return SessionScript(
        identity=Identity.from_dict(data["identity"]),
        steps=tuple(_step_from_dict(s) for s in data["steps"]),
        start_time=float(data.get("start_time", 0.0)),
        base_dir=path.parent,
    )


class ServeMode(str, Enum):
    SAMPLED = "sampled"
    EXPECTED = "expected"


class MockAdServer:
    """A stand-in ad network with a running belief about the user.

    The belief (``estimate_counts``) evolves only through :meth:`observe`;
    counts observed at visit v start influencing serving at visit v + lag.
    """

    def __init__(
        self,
        taxonomy: Taxonomy,
        *,
        ads_per_visit: int = 3,
        lag: int = 0,
        seed: int = 0,
        mode: ServeMode | str = ServeMode.SAMPLED,
    ):
        if ads_per_visit < 1:
            raise ValueError("ads_per_visit must be >= 1")
        if lag < 0:
            raise ValueError("lag must be >= 0")
        self.taxonomy = taxonomy
        self.ads_per_visit = ads_per_visit
        self.lag = lag
        self.seed = seed
        self.mode = ServeMode(mode)
        self._rng = random.Random(seed)
        self._estimate = [0] * taxonomy.size
        self._pending: list[tuple[int, CategoryCounts]] = []
        self._visit = 0

    @property
    def estimate_counts(self) -> CategoryCounts:
        return CategoryCounts(tuple(self._estimate))

    @property
    def visits_served(self) -> int:
        return self._visit

    def observe(self, event_counts: CategoryCounts) -> None:
        """Feed one visit's interest counts into the belief, lag applied."""
        if len(event_counts) != self.taxonomy.size:
            raise DimensionMismatchError(
                f"expected {self.taxonomy.size} categories, got {len(event_counts)}"
            )
        self._pending.append((self._visit + 1 + self.lag, event_counts))

    def _merge_due(self) -> list[int]:
        increment = [0] * self.taxonomy.size
        still_pending = []
        for due, counts in self._pending:
            if due <= self._visit:
                for i, c in enumerate(counts.counts):
                    increment[i] += c
            else:
                still_pending.append((due, counts))
        self._pending = still_pending
        for i, c in enumerate(increment):
            self._estimate[i] += c
        return increment

    def _draw(self, weights: list[int]) -> int:
        total = sum(weights)
        r = self._rng.random() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if r < acc:
                return i
        return len(weights) - 1

    def serve(self) -> list[str]:
        """Serve one visit's ads as taxonomy tokens (may be empty)."""
        self._visit += 1
        increment = self._merge_due()
        rep = self.taxonomy.representative_term
        if self.mode is ServeMode.EXPECTED:
            if any(increment):
                return [rep(cid) for cid, n in enumerate(increment) for _ in range(n)]
            if not any(self._estimate):
                return [rep(cid) for cid in range(self.taxonomy.size)]
            return []
        weights = self._estimate if any(self._estimate) else [1] * self.taxonomy.size
        return [rep(self._draw(weights)) for _ in range(self.ads_per_visit)]


@dataclass(frozen=True)
class ConvergenceReport:
    metric: str
    threshold: float
    visits_to_threshold: int | None
    final_value: float | None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "threshold": self.threshold,
            "visits_to_threshold": self.visits_to_threshold,
            "final_value": self.final_value,
        }


@dataclass(frozen=True)
class ReplayWarning:
    step: int
    url: str
    reason: str


@dataclass
class ReplayResult:
    store: EventStore
    identity: Identity
    series: DistanceSeries
    report: ConvergenceReport
    warnings: list[ReplayWarning] = field(default_factory=list)

    @property
    def events(self) -> tuple[BrowsingEvent, ...]:
        return self.store.events(self.identity)


def _ad_request_url(cfg: AdParamConfig, tokens: list[str]) -> str:
    host = "ads." + cfg.network_hosts[0]
    delimiter = cfg.token_delimiters[0] if cfg.token_delimiters else ","
    query = urlencode({cfg.topical_params[0]: delimiter.join(tokens)})
    return f"https://{host}/serve?{query}"


def _resolve_page(step: SessionStep, base_dir: Path, fetcher) -> HtmlDocument | None:
    if isinstance(step.source, InlinePage):
        return HtmlDocument(step.source.html, base_url=step.url)
    if isinstance(step.source, SnapshotPage):
        snapshot = Path(step.source.path)
        if not snapshot.is_absolute():
            snapshot = base_dir / snapshot
        if not snapshot.is_file():
            raise FileNotFoundError(f"page snapshot not found: {snapshot}")
        return HtmlDocument(snapshot.read_text(encoding="utf-8"), base_url=step.url)
    result = fetcher(step.url)
    return result.document


def replay(
    script: SessionScript,
    server: MockAdServer,
    tax: Taxonomy,
    cfg: AdParamConfig,
    *,
    metric: str = "l1",
    threshold: float = 0.3,
    rake_config: RakeConfig | None = None,
    epsilon: float = 1e-9,
    real_time: bool = False,
    fetcher: Callable | None = None,
) -> ReplayResult:
    """Replay a reading list end to end.

    Each step builds an event (extraction and classification), feeds the
    server, records the served ads as a third-party request on the event,
    and finally the per-visit distance series plus convergence report are
    computed over the produced log. Deterministic given the script, the
    server seed, and snapshot contents; dwell is recorded, not slept,
    unless ``real_time`` is set.
    """
    if fetcher is None:
        from .fetch import fetch_page as fetcher  # deferred: pulls in requests

    rake_config = rake_config or default_rake_config()
    store = EventStore(rake_config)
    warnings: list[ReplayWarning] = []
    t = script.start_time

    for step_no, step in enumerate(script.steps, start=1):
        try:
            page = _resolve_page(step, script.base_dir, fetcher)
        except FetchError as exc:
            warnings.append(ReplayWarning(step_no, step.url, str(exc)))
            logger.warning("step %d (%s) skipped: %s", step_no, step.url, exc)
            continue
        if real_time and step.dwell:
            time.sleep(step.dwell)
        keywords = extract_keywords(page, rake_config) if page is not None else []
        counts = tax.classify_all([k.term for k in keywords]).counts
        server.observe(counts)
        tokens = server.serve()
        requests = []
        if tokens:
            initiator = url_registrable_domain(step.url) or ""
            requests.append(RequestRecord(_ad_request_url(cfg, tokens), initiator))
        store.new_event(script.identity, step.url, t, step.dwell, page, requests)
        t += max(step.dwell, 1.0)

    produced = store.events(script.identity) if store.identities() else ()
    series = distance_series(
        store,
        script.identity,
        [e.timestamp for e in produced],
        tax,
        cfg,
        metric=metric,
        epsilon=epsilon,
    ) if produced else DistanceSeries(metric)
    report = ConvergenceReport(
        metric=metric,
        threshold=threshold,
        visits_to_threshold=convergence_visits(series, threshold),
        final_value=series.points[-1].value if series.points else None,
    )
    return ReplayResult(store, script.identity, series, report, warnings)

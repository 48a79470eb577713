"""Distance measures between user and ad profiles.

The primary tracking signal is the 1-norm of the PMF difference; the
2-norm and a smoothed KL divergence are available as alternatives. Ad
profiles routinely assign zero mass to categories, so KL smooths its
second argument with an additive epsilon and renormalizes; unsmoothed KL
would be infinite and useless as a signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .adnet import AdParamConfig, ad_profile_at
from .errors import DimensionMismatchError, EmptyProfileError
from .events import EventStore, Identity
from .profiles import Profile, user_profile_at
from .taxonomy import Taxonomy

__all__ = [
    "DistanceSeries",
    "METRICS",
    "SeriesPoint",
    "SkippedVisit",
    "convergence_visits",
    "distance_series",
    "kl",
    "l1",
    "l2",
]

SERIES_CSV_HEADER = "visit,timestamp,value,user_support,ad_support"

_BOUND_SLACK = 1e-9


def _check_pair(p: Profile, q: Profile) -> None:
    if p.is_empty or q.is_empty:
        raise EmptyProfileError("distance against an empty profile is undefined")
    if len(p) != len(q):
        raise DimensionMismatchError(
            f"profiles have different lengths: {len(p)} vs {len(q)}"
        )


def l1(p: Profile, q: Profile) -> float:
    """Sum of absolute coordinate differences; in [0, 2]."""
    _check_pair(p, q)
    return sum(abs(a - b) for a, b in zip(p.pmf, q.pmf))


def l2(p: Profile, q: Profile) -> float:
    """Euclidean norm of the coordinate difference; in [0, sqrt(2)]."""
    _check_pair(p, q)
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p.pmf, q.pmf)))


def kl(p: Profile, q: Profile, epsilon: float = 1e-9) -> float:
    """KL divergence D(p || q~) in bits, with q smoothed additively.

    q~ = (q + epsilon) / (1 + L * epsilon), so every entry is positive;
    coordinates where p is zero contribute nothing.
    """
    _check_pair(p, q)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    denom = 1.0 + len(q) * epsilon
    return sum(
        pi * math.log2(pi * denom / (qi + epsilon))
        for pi, qi in zip(p.pmf, q.pmf)
        if pi > 0
    )


METRICS = {"l1": l1, "l2": l2, "kl": kl}

_VALUE_CAPS = {"l1": 2.0, "l2": math.sqrt(2.0), "kl": math.inf}


@dataclass(frozen=True)
class SeriesPoint:
    visit: int
    timestamp: float
    value: float
    user_support: int
    ad_support: int


@dataclass(frozen=True)
class SkippedVisit:
    visit: int
    timestamp: float
    reason: str


@dataclass
class DistanceSeries:
    """Per-visit distance values plus the visits that had to be skipped."""

    metric: str
    points: list[SeriesPoint] = field(default_factory=list)
    skipped: list[SkippedVisit] = field(default_factory=list)

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    def add_point(self, point: SeriesPoint) -> None:
        if self.points and point.visit <= self.points[-1].visit:
            raise ValueError("visit indices must strictly increase")
        cap = _VALUE_CAPS[self.metric]
        if not -_BOUND_SLACK <= point.value <= cap + _BOUND_SLACK:
            raise ValueError(f"{self.metric} value {point.value} out of range")
        self.points.append(point)

    @property
    def values(self) -> list[float]:
        return [p.value for p in self.points]

    def to_csv(self) -> str:
        lines = [SERIES_CSV_HEADER]
        for p in self.points:
            lines.append(
                f"{p.visit},{p.timestamp!r},{p.value!r},{p.user_support},{p.ad_support}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    def to_json(self) -> str:
        rows = [
            {
                "visit": p.visit,
                "timestamp": p.timestamp,
                "value": p.value,
                "user_support": p.user_support,
                "ad_support": p.ad_support,
            }
            for p in self.points
        ]
        return json.dumps(rows, indent=2) + "\n"

    @classmethod
    def from_csv(cls, text: str, metric: str = "l1") -> "DistanceSeries":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != SERIES_CSV_HEADER:
            raise ValueError(f"series CSV must start with header {SERIES_CSV_HEADER!r}")
        series = cls(metric)
        for line in lines[1:]:
            visit, ts, value, usup, asup = line.split(",")
            series.add_point(
                SeriesPoint(int(visit), float(ts), float(value), int(usup), int(asup))
            )
        return series


def distance_series(
    store: EventStore,
    identity: Identity | str,
    timestamps,
    tax: Taxonomy,
    cfg: AdParamConfig,
    metric: str = "l1",
    epsilon: float = 1e-9,
) -> DistanceSeries:
    """Evaluate the user/ad profile distance at each timestamp.

    Produces one point per timestamp where both profiles are non-empty;
    the rest are recorded as skipped, never as sentinel values.
    """
    timestamps = list(timestamps)
    if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise ValueError("timestamps must strictly increase")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    series = DistanceSeries(metric)
    for visit, t in enumerate(timestamps, start=1):
        p = user_profile_at(store, identity, t, tax)
        q = ad_profile_at(store, identity, t, tax, cfg)
        empty = [name for name, prof in (("user", p), ("ad", q)) if prof.is_empty]
        if empty:
            series.skipped.append(
                SkippedVisit(visit, t, " and ".join(empty) + " profile empty")
            )
            continue
        value = kl(p, q, epsilon) if metric == "kl" else METRICS[metric](p, q)
        series.add_point(SeriesPoint(visit, t, value, p.support_count, q.support_count))
    return series


def convergence_visits(series: DistanceSeries, threshold: float) -> int | None:
    """Smallest visit index whose value is below the threshold, if any."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    for point in series.points:
        if point.value < threshold:
            return point.visit
    return None

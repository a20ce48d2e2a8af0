"""Event lists, shock dummies, and mortality-based severity classes.

An event is an outbreak year plus the set of countries it reached.  The
shock dummy marks each affected country in the event year.  When a
cross-country mortality measure is available for an event, affected
countries are split into high / medium / low severity by comparing each
country's mortality with the event's 70th and 30th percentiles (strict
inequalities; linear-interpolation percentiles by default, nearest-rank as
an option).  Countries without a usable class fall back to medium and are
counted in the diagnostics rather than dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import EventError
from .panel import Panel

__all__ = [
    "PandemicEvent",
    "EventList",
    "EventSet",
    "SeverityClasses",
    "severity_terciles",
    "build_dummies",
]

SEVERITY_LEVELS = ("high", "medium", "low")


@dataclass(frozen=True)
class PandemicEvent:
    """One outbreak: a label, its onset year, and the countries it reached."""

    name: str
    year: int
    entities: tuple[str, ...]

    def __post_init__(self):
        if not self.entities:
            raise EventError(f"event {self.name!r} affects no countries")
        if len(set(self.entities)) != len(self.entities):
            dupes = sorted(
                {e for e in self.entities if self.entities.count(e) > 1}
            )
            raise EventError(
                f"event {self.name!r} lists countries more than once: {dupes}"
            )


@dataclass(frozen=True)
class EventList:
    """All events of a study plus an optional mortality measure.

    ``mortality`` maps ``(event_name, entity)`` to a non-negative
    cross-country severity measure (deaths per capita, say).  Keys must
    refer to (event, affected-country) pairs that exist.
    """

    events: tuple[PandemicEvent, ...]
    mortality: Mapping[tuple[str, str], float] | None = None

    def __post_init__(self):
        if not self.events:
            raise EventError("event list is empty")
        names = [ev.name for ev in self.events]
        if len(set(names)) != len(names):
            raise EventError("duplicate event names")
        if self.mortality is not None:
            affected = {
                (ev.name, ent) for ev in self.events for ent in ev.entities
            }
            for key, value in self.mortality.items():
                if key not in affected:
                    raise EventError(
                        f"mortality entry {key!r} does not match any "
                        "(event, affected country) pair"
                    )
                if not np.isfinite(value) or value < 0:
                    raise EventError(f"mortality for {key!r} must be >= 0")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ev.name for ev in self.events)

    def total_affected(self) -> int:
        return sum(len(ev.entities) for ev in self.events)


@dataclass(frozen=True)
class SeverityClasses:
    """Per-(event, country) severity labels plus classification diagnostics."""

    classes: Mapping[tuple[str, str], str]
    unclassifiable_events: tuple[str, ...] = ()
    missing_mortality: tuple[tuple[str, str], ...] = ()


def _percentile(values: np.ndarray, q: float, rule: str) -> float:
    if rule == "linear":
        return float(np.percentile(values, q))
    if rule == "nearest_rank":
        # classical nearest-rank: the ceil(q/100 * n)-th order statistic
        n = values.size
        rank = int(np.ceil(q / 100.0 * n))
        rank = min(max(rank, 1), n)
        return float(np.sort(values)[rank - 1])
    raise EventError(f"unknown percentile rule {rule!r}")


def severity_terciles(
    events: EventList, rule: str = "linear"
) -> SeverityClasses:
    """Classify each (event, country) pair by within-event mortality.

    High when mortality exceeds the event's 70th percentile, low when below
    the 30th, medium otherwise — both comparisons strict, so a country
    sitting exactly on a cutoff is medium.  Percentiles are taken over the
    event's available mortality observations only.  An event with fewer
    than three mortality observations is flagged unclassifiable and every
    affected country falls back to medium; so does any country missing a
    mortality value in an otherwise classifiable event.
    """
    if events.mortality is None:
        raise EventError("event list carries no mortality data")
    classes: dict[tuple[str, str], str] = {}
    unclassifiable: list[str] = []
    missing: list[tuple[str, str]] = []
    for ev in events.events:
        have = [
            (ent, events.mortality[(ev.name, ent)])
            for ent in ev.entities
            if (ev.name, ent) in events.mortality
        ]
        absent = [ent for ent in ev.entities if (ev.name, ent) not in events.mortality]
        missing.extend((ev.name, ent) for ent in absent)
        if len(have) < 3:
            unclassifiable.append(ev.name)
            for ent in ev.entities:
                classes[(ev.name, ent)] = "medium"
            continue
        values = np.asarray([m for _, m in have], dtype=float)
        p70 = _percentile(values, 70.0, rule)
        p30 = _percentile(values, 30.0, rule)
        for ent, m in have:
            if m > p70:
                classes[(ev.name, ent)] = "high"
            elif m < p30:
                classes[(ev.name, ent)] = "low"
            else:
                classes[(ev.name, ent)] = "medium"
        for ent in absent:
            classes[(ev.name, ent)] = "medium"
    return SeverityClasses(
        classes=classes,
        unclassifiable_events=tuple(unclassifiable),
        missing_mortality=tuple(missing),
    )


@dataclass(frozen=True)
class EventSet:
    """Shock dummies aligned to a panel's entity x period grid.

    ``dummy`` is the plain outbreak indicator; ``high``/``medium``/``low``
    partition it cell-by-cell wherever severity was assigned (countries
    without a class land in ``medium``).  Diagnostics record countries in
    the event list that the panel does not contain, event years outside the
    panel's period range, and how many dummy cells took the
    medium-by-fallback route.
    """

    entities: tuple[str, ...]
    periods: tuple[int, ...]
    dummy: np.ndarray
    high: np.ndarray
    medium: np.ndarray
    low: np.ndarray
    unresolved_entities: tuple[tuple[str, str], ...] = ()
    out_of_range_years: tuple[tuple[str, int], ...] = ()
    fallback_medium_cells: int = 0
    unclassifiable_events: tuple[str, ...] = ()

    def shock_count(self) -> int:
        return int(self.dummy.sum())

    def column(self, which: str) -> np.ndarray:
        """One of the four dummies by name: all, high, medium, low."""
        table = {
            "all": self.dummy,
            "high": self.high,
            "medium": self.medium,
            "low": self.low,
        }
        try:
            return table[which]
        except KeyError:
            raise EventError(
                f"unknown shock dummy {which!r}; pick one of {sorted(table)}"
            ) from None


_SEVERITY_RANK = {"high": 2, "medium": 1, "low": 0}


def build_dummies(
    events: EventList, panel: Panel, rule: str = "linear"
) -> EventSet:
    """Lay the event list onto a panel grid as 0/1 shock dummies.

    Every affected country found in the panel gets a 1 in the event year.
    Severity dummies are filled from :func:`severity_terciles` when the
    event list carries mortality; without mortality the whole dummy goes to
    ``medium`` (and is counted as fallback).  If two events hit the same
    cell with different classes the more severe one wins, keeping the
    high/medium/low split an exact partition of the dummy.
    """
    shape = (panel.n_entities, panel.n_periods)
    dummy = np.zeros(shape)
    rank = np.full(shape, -1, dtype=int)  # severity rank per hit cell
    unresolved: list[tuple[str, str]] = []
    out_of_range: list[tuple[str, int]] = []
    fallback = 0

    if events.mortality is not None:
        severity = severity_terciles(events, rule=rule)
        classes = severity.classes
        unclassifiable = severity.unclassifiable_events
    else:
        classes = {}
        unclassifiable = ()

    pmin, pmax = panel.periods[0], panel.periods[-1]
    for ev in events.events:
        if ev.year < pmin or ev.year > pmax:
            out_of_range.append((ev.name, ev.year))
            continue
        j = ev.year - pmin
        for ent in ev.entities:
            try:
                i = panel.entity_row(ent)
            except Exception:
                unresolved.append((ev.name, ent))
                continue
            dummy[i, j] = 1.0
            label = classes.get((ev.name, ent))
            if label is None:
                label = "medium"
                fallback += 1
            elif (
                events.mortality is not None
                and (ev.name, ent) not in events.mortality
            ):
                fallback += 1
            rank[i, j] = max(rank[i, j], _SEVERITY_RANK[label])

    high = (rank == 2).astype(float)
    medium = (rank == 1).astype(float)
    low = (rank == 0).astype(float)
    return EventSet(
        entities=panel.entities,
        periods=panel.periods,
        dummy=dummy,
        high=high,
        medium=medium,
        low=low,
        unresolved_entities=tuple(unresolved),
        out_of_range_years=tuple(out_of_range),
        fallback_medium_cells=fallback,
        unclassifiable_events=tuple(unclassifiable),
    )

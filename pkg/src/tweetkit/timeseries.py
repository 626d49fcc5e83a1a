"""Daily tweet-volume series, case-count alignment, and Pearson correlation.

Tweet series are bucketed by UTC calendar day with interior gaps filled with
zeros (no tweets is a real zero); case-count gaps stay as nulls (unreported
days are missing data, not zeros) and are excluded pairwise on alignment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

from .base import ConfigurationError
from .ingest import CaseCountRow, TweetKind, TweetRecord

TWEET_SERIES = tuple(k.value for k in TweetKind)
CASE_SERIES = ("confirmed", "deaths", "recovered")


@dataclass
class DailySeries:
    dates: list[date]
    values: dict[str, list[float | None]]

    def series(self, name: str) -> "Series":
        if name not in self.values:
            raise KeyError(f"no series named {name!r}; have {sorted(self.values)}")
        return Series(name=name, dates=list(self.dates), values=list(self.values[name]))

    def tidy_rows(self) -> list[tuple[str, str, float | None]]:
        rows = []
        for name in sorted(self.values):
            for day, value in zip(self.dates, self.values[name]):
                rows.append((day.isoformat(), name, value))
        return rows


@dataclass
class Series:
    name: str
    dates: list[date]
    values: list[float | None]


@dataclass
class AlignedPair:
    names: tuple[str, str]
    dates: list[date]
    a: list[float]
    b: list[float]


@dataclass
class CorrelationReport:
    pair: tuple[str, str]
    pearson_r: float | None
    n_overlap: int
    window: tuple[str, str]
    undefined_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "pearson_r": self.pearson_r,
            "n_overlap": self.n_overlap,
            "window": list(self.window),
            "undefined_reason": self.undefined_reason,
        }


def _day_range(first: date, last: date) -> list[date]:
    days = []
    day = first
    while day <= last:
        days.append(day)
        day += timedelta(days=1)
    return days


def bucket_daily(records: Sequence[TweetRecord]) -> DailySeries:
    """Count tweets per UTC day per kind; interior missing days become zeros."""
    if not records:
        return DailySeries(dates=[], values={name: [] for name in TWEET_SERIES})
    days = sorted({rec.created_at.date() for rec in records})
    axis = _day_range(days[0], days[-1])
    index = {d: i for i, d in enumerate(axis)}
    values: dict[str, list[float | None]] = {
        name: [0.0] * len(axis) for name in TWEET_SERIES
    }
    for rec in records:
        values[rec.kind.value][index[rec.created_at.date()]] += 1.0
    return DailySeries(dates=axis, values=values)


def case_count_series(rows: Sequence[CaseCountRow]) -> DailySeries:
    """Case counts on a gap-free date axis; unreported days are None."""
    if not rows:
        return DailySeries(dates=[], values={name: [] for name in CASE_SERIES})
    by_day = {row.date: row for row in rows}
    axis = _day_range(min(by_day), max(by_day))
    values: dict[str, list[float | None]] = {name: [] for name in CASE_SERIES}
    for day in axis:
        row = by_day.get(day)
        values["confirmed"].append(float(row.confirmed) if row else None)
        values["deaths"].append(float(row.deaths) if row else None)
        values["recovered"].append(float(row.recovered) if row else None)
    return DailySeries(dates=axis, values=values)


def align(
    series_a: Series,
    series_b: Series,
    window: tuple[date, date] | None = None,
) -> AlignedPair:
    """Restrict two daily series to their common dates (and window), dropping
    null days pairwise."""
    if not series_a.dates or not series_b.dates:
        raise ConfigurationError("cannot align an empty series")
    a_map = dict(zip(series_a.dates, series_a.values))
    b_map = dict(zip(series_b.dates, series_b.values))
    common = sorted(set(a_map) & set(b_map))
    if window is not None:
        start, end = window
        common = [d for d in common if start <= d <= end]
    dates, xs, ys = [], [], []
    for day in common:
        va, vb = a_map[day], b_map[day]
        if va is None or vb is None:
            continue
        dates.append(day)
        xs.append(float(va))
        ys.append(float(vb))
    if not dates:
        raise ConfigurationError(
            "no overlapping dates between "
            f"{series_a.name} [{series_a.dates[0]}..{series_a.dates[-1]}] and "
            f"{series_b.name} [{series_b.dates[0]}..{series_b.dates[-1]}]"
            + (f" within window {window[0]}..{window[1]}" if window else "")
        )
    return AlignedPair(names=(series_a.name, series_b.name), dates=dates, a=xs, b=ys)


def pearson(pair: AlignedPair) -> CorrelationReport:
    """Standard Pearson correlation over an aligned pair.

    Fewer than 3 points is a contract violation; a constant series makes r
    undefined and is reported as such rather than raising.
    """
    n = len(pair.dates)
    if n < 3:
        raise ConfigurationError(f"pearson needs >= 3 overlapping points, got {n}")
    window = (pair.dates[0].isoformat(), pair.dates[-1].isoformat())
    mean_a = sum(pair.a) / n
    mean_b = sum(pair.b) / n
    dev_a = [x - mean_a for x in pair.a]
    dev_b = [y - mean_b for y in pair.b]
    var_a = sum(d * d for d in dev_a)
    var_b = sum(d * d for d in dev_b)
    if var_a == 0.0 or var_b == 0.0:
        which = pair.names[0] if var_a == 0.0 else pair.names[1]
        return CorrelationReport(
            pair=pair.names, pearson_r=None, n_overlap=n, window=window,
            undefined_reason=f"series {which!r} is constant over the overlap",
        )
    cov = sum(da * db for da, db in zip(dev_a, dev_b))
    r = cov / math.sqrt(var_a * var_b)
    return CorrelationReport(pair=pair.names, pearson_r=r, n_overlap=n, window=window)

"""Cyclical encoding of timestamps.

A scalar time component t with period t_max is mapped onto the unit
circle as (sin(2*pi*t/t_max), cos(2*pi*t/t_max)), so that values near
the period boundary (e.g. 23:59 and 00:01) end up close together.
Three components are encoded per timestamp: day-of-year, weekday and
second-of-day, giving a 6-dimensional time vector.
"""

from __future__ import annotations

import calendar
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import DataError

DAYS_PER_WEEK = 7
SECONDS_PER_DAY = 86400

# Accepted log timestamp layouts. The month-day forms appear in CASAS
# logs that omit the year; callers must then supply a default year.
_FULL_FORMATS = (
    "%Y-%m-%d %H:%M:%S.%f",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S.%f",
    "%Y-%m-%dT%H:%M:%S",
)
_YEARLESS_FORMATS = (
    "%m-%d %H:%M:%S.%f",
    "%m-%d %H:%M:%S",
)


def encode_component(t: float, t_max: int) -> tuple[float, float]:
    """Encode one time component as a (sin, cos) point on the unit circle.

    t may be any real value; the encoding is periodic with period t_max,
    so t = t_max aliases t = 0.
    """
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    angle = 2.0 * math.pi * t / t_max
    return (math.sin(angle), math.cos(angle))


def cyclic_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Cosine distance 1 - a.b between two encoded components.

    Inputs are expected on the unit circle (as produced by
    encode_component); zero vectors are rejected.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    if (ax == 0.0 and ay == 0.0) or (bx == 0.0 and by == 0.0):
        raise ValueError("cyclic_distance is undefined for a zero vector")
    return 1.0 - (ax * bx + ay * by)


@dataclass(frozen=True)
class TimeComponents:
    """The three scalar components of a timestamp plus their periods.

    day_of_year is the 1-based ordinal (Jan 1 = 1), used directly as t.
    weekday counts from Monday = 0. days_in_year is 366 in leap years.
    """

    day_of_year: int
    weekday: int
    second_of_day: int
    days_in_year: int

    def __post_init__(self) -> None:
        if not 1 <= self.day_of_year <= self.days_in_year:
            raise ValueError(f"day_of_year {self.day_of_year} out of range")
        if not 0 <= self.weekday < DAYS_PER_WEEK:
            raise ValueError(f"weekday {self.weekday} out of range")
        if not 0 <= self.second_of_day < SECONDS_PER_DAY:
            raise ValueError(f"second_of_day {self.second_of_day} out of range")

    @classmethod
    def from_datetime(cls, ts: datetime) -> "TimeComponents":
        return cls(
            day_of_year=ts.timetuple().tm_yday,
            weekday=ts.weekday(),
            second_of_day=ts.hour * 3600 + ts.minute * 60 + ts.second,
            days_in_year=366 if calendar.isleap(ts.year) else 365,
        )

    def encode(self) -> np.ndarray:
        """Six-element vector: (sin, cos) for each component."""
        parts = (
            encode_component(self.day_of_year, self.days_in_year)
            + encode_component(self.weekday, DAYS_PER_WEEK)
            + encode_component(self.second_of_day, SECONDS_PER_DAY)
        )
        return np.asarray(parts, dtype=np.float64)


def encode_timestamp(ts: datetime | str, default_year: int | None = None) -> np.ndarray:
    """Encode a timestamp into the 6-dimensional cyclical time vector.

    Order: day-of-year (sin, cos), weekday (sin, cos), second-of-day
    (sin, cos). Strings are parsed with parse_timestamp.
    """
    if isinstance(ts, str):
        ts = parse_timestamp(ts, default_year=default_year)
    return TimeComponents.from_datetime(ts).encode()


def parse_timestamp(text: str, default_year: int | None = None) -> datetime:
    """Parse a log timestamp.

    Accepts 'YYYY-MM-DD HH:MM:SS[.ffffff]' (also with a 'T' separator)
    and the year-less 'MM-DD HH:MM:SS' used by CASAS logs, in which case
    default_year must be given.
    """
    text = text.strip()
    for fmt in _FULL_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    # Year-less form: validate the shape against a leap year first so
    # that Feb 29 is recognised, then re-parse with the configured year.
    for fmt in _YEARLESS_FORMATS:
        try:
            datetime.strptime(f"2000-{text}", f"%Y-{fmt}")
        except ValueError:
            continue
        if default_year is None:
            raise DataError(
                f"timestamp {text!r} has no year; a default year is required"
            )
        try:
            return datetime.strptime(f"{default_year}-{text}", f"%Y-{fmt}")
        except ValueError as exc:
            raise DataError(f"invalid timestamp {text!r}: {exc}") from exc
    raise DataError(f"unparseable timestamp: {text!r}")

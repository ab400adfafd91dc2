"""Time axis shared by every other module.

All series are hourly, naive local time, and every day is exactly 24 hours
long. Hour ``h`` of day ``j`` lives at flat index ``24 * j + h`` and covers
the interval ``[h, h + 1)``.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

HOURS_PER_DAY = 24
SUMMER_MONTHS = (6, 7, 8, 9)

DEFAULT_START = dt.date(2011, 11, 1)
DEFAULT_N_DAYS = 366

UNITS = ("kWh", "kWh/m2", "$/kWh")


class CalendarError(ValueError):
    pass


@dataclass(frozen=True)
class Calendar:
    """Per-day flags for one simulated year.

    ``weekday`` follows :meth:`datetime.date.weekday` (Monday is 0).
    """

    start_date: dt.date
    n_days: int
    weekday: np.ndarray = field(repr=False)
    is_holiday: np.ndarray = field(repr=False)
    is_summer: np.ndarray = field(repr=False)

    @property
    def n_hours(self) -> int:
        return HOURS_PER_DAY * self.n_days

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=self.n_days - 1)

    def date_of(self, j: int) -> dt.date:
        _check_day(j, self.n_days)
        return self.start_date + dt.timedelta(days=int(j))

    def day_index(self, date: dt.date) -> int:
        j = (date - self.start_date).days
        _check_day(j, self.n_days)
        return j

    def season(self, j: int) -> str:
        _check_day(j, self.n_days)
        return "summer" if self.is_summer[j] else "winter"

    @property
    def is_business_day(self) -> np.ndarray:
        """Non-holiday weekdays."""
        return (self.weekday < 5) & ~self.is_holiday

    def hourly(self, day_flags: np.ndarray) -> np.ndarray:
        """Broadcast a per-day array to the hourly axis."""
        return np.repeat(np.asarray(day_flags), HOURS_PER_DAY)

    @property
    def hour_of_day(self) -> np.ndarray:
        return np.tile(np.arange(HOURS_PER_DAY), self.n_days)

    @property
    def day_of_year(self) -> np.ndarray:
        """Day-of-year (1-based) of each simulated day."""
        return np.array(
            [self.date_of(j).timetuple().tm_yday for j in range(self.n_days)]
        )


def _check_day(j, n_days):
    if not 0 <= j < n_days:
        raise IndexError(f"day index {j} outside [0, {n_days})")


def build_calendar(
    start_date: dt.date = DEFAULT_START,
    n_days: int = DEFAULT_N_DAYS,
    holidays: Iterable[dt.date] = (),
) -> Calendar:
    if n_days not in (365, 366):
        raise CalendarError(f"n_days must be 365 or 366, got {n_days}")
    dates = [start_date + dt.timedelta(days=k) for k in range(n_days)]
    is_holiday = np.zeros(n_days, dtype=bool)
    for h in holidays:
        j = (h - start_date).days
        if not 0 <= j < n_days:
            raise CalendarError(
                f"holiday {h.isoformat()} falls outside "
                f"{start_date.isoformat()}..{dates[-1].isoformat()}"
            )
        is_holiday[j] = True
    weekday = np.array([d.weekday() for d in dates], dtype=np.int64)
    is_summer = np.array([d.month in SUMMER_MONTHS for d in dates], dtype=bool)
    for arr in (weekday, is_holiday, is_summer):
        arr.setflags(write=False)
    return Calendar(start_date, n_days, weekday, is_holiday, is_summer)


def parse_holiday_lines(lines: Iterable[str]) -> list[dt.date]:
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(dt.date.fromisoformat(line))
        except ValueError as exc:
            raise CalendarError(f"line {lineno}: bad date {line!r}") from exc
    return out


def read_holidays(path: str | Path) -> list[dt.date]:
    """Read a holiday file: one ISO-8601 date per line, ``#`` comments."""
    with open(path, encoding="utf-8") as fh:
        return parse_holiday_lines(fh)


def default_holidays(start_date: dt.date = DEFAULT_START, n_days: int = DEFAULT_N_DAYS):
    """US federal holidays (observed) inside the simulated year.

    The default year uses the packaged list; other years are generated with
    pandas' federal holiday rules.
    """
    if start_date == DEFAULT_START and n_days == DEFAULT_N_DAYS:
        text = (
            resources.files("dervalue")
            .joinpath("data/us_federal_holidays_2011_2012.txt")
            .read_text(encoding="utf-8")
        )
        return parse_holiday_lines(text.splitlines())
    from pandas.tseries.holiday import USFederalHolidayCalendar

    end = start_date + dt.timedelta(days=n_days - 1)
    idx = USFederalHolidayCalendar().holidays(start_date, end)
    return [ts.date() for ts in idx]


@dataclass(frozen=True)
class HourlySeries:
    """An hourly vector tagged with its unit."""

    values: np.ndarray
    unit: str = "kWh"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size % HOURS_PER_DAY:
            raise ValueError("hourly series must be 1-D with a multiple of 24 entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("hourly series contains non-finite values")
        if self.unit != "$/kWh" and np.any(v < 0):
            raise ValueError(f"{self.unit} series must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_days(self) -> int:
        return self.values.size // HOURS_PER_DAY

    def __len__(self):
        return self.values.size

    def days(self) -> np.ndarray:
        """Read-only ``(n_days, 24)`` view."""
        return self.values.reshape(self.n_days, HOURS_PER_DAY)

    def check_calendar(self, calendar: Calendar) -> None:
        if self.values.size != calendar.n_hours:
            raise ValueError(
                f"series has {self.values.size} hours, calendar expects {calendar.n_hours}"
            )


@dataclass(frozen=True)
class LoadTrace:
    household_id: str
    zip: str
    series: HourlySeries

    @property
    def kwh(self) -> np.ndarray:
        return self.series.values

    @property
    def mean_kw(self) -> float:
        return float(self.series.values.mean())

    @property
    def zero_fraction(self) -> float:
        return float(np.mean(self.series.values == 0.0))


def slice_day(series, j: int) -> np.ndarray:
    """Hours ``24j .. 24j+23`` of an hourly series (array or HourlySeries)."""
    values = series.values if isinstance(series, HourlySeries) else np.asarray(series)
    n_days = values.size // HOURS_PER_DAY
    _check_day(j, n_days)
    return values[HOURS_PER_DAY * j : HOURS_PER_DAY * (j + 1)]

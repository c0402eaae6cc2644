"""UTC timestamp and period helpers.

All timestamps in the system are UTC at 1-second precision and travel as
``YYYY-MM-DDTHH:MM:SSZ`` strings. Time ranges are half-open [from, to);
only the sensor window around a message is closed.
"""

from __future__ import annotations

import re
from datetime import date, datetime, timedelta, timezone

from .errors import ValidationError

TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")

_DURATION_RE = re.compile(r"^(\d+)([smhd]?)$")
_DURATION_UNITS = {"": 1, "s": 1, "m": 60, "h": 3600, "d": 86400}


def parse_ts(value: str, field: str = "timestamp") -> datetime:
    """Parse a strict ``YYYY-MM-DDTHH:MM:SSZ`` string to an aware UTC datetime."""
    if not isinstance(value, str) or not TS_RE.match(value):
        raise ValidationError(f"expected YYYY-MM-DDTHH:MM:SSZ, got {value!r}", field)
    try:
        dt = datetime.strptime(value, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError:
        raise ValidationError(f"invalid timestamp {value!r}", field)
    return dt.replace(tzinfo=timezone.utc)


def format_ts(dt: datetime) -> str:
    return as_utc_second(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


def as_utc_second(dt: datetime) -> datetime:
    """Normalize to UTC and truncate to whole seconds (storage precision)."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def now_utc() -> datetime:
    return as_utc_second(datetime.now(timezone.utc))


def parse_duration_s(value, field: str = "duration") -> int:
    """Accept an integer second count or a ``<n>[smhd]`` suffix form."""
    if isinstance(value, bool):
        raise ValidationError("expected a duration", field)
    if isinstance(value, int):
        seconds = value
    elif isinstance(value, str):
        m = _DURATION_RE.match(value.strip())
        if not m:
            raise ValidationError(f"expected seconds or <n>[smhd], got {value!r}", field)
        seconds = int(m.group(1)) * _DURATION_UNITS[m.group(2)]
    else:
        raise ValidationError("expected a duration", field)
    if seconds <= 0:
        raise ValidationError("duration must be positive", field)
    return seconds


def parse_date(value: str, field: str = "date") -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise ValidationError(f"expected YYYY-MM-DD, got {value!r}", field)


def day_bounds(day: date) -> tuple[datetime, datetime]:
    start = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
    return start, start + timedelta(days=1)


def iso_week_bounds(day: date) -> tuple[datetime, datetime]:
    """Bounds of the ISO week containing ``day`` (Monday to next Monday)."""
    monday = day - timedelta(days=day.isoweekday() - 1)
    start = datetime(monday.year, monday.month, monday.day, tzinfo=timezone.utc)
    return start, start + timedelta(days=7)


def month_bounds(day: date) -> tuple[datetime, datetime]:
    start = datetime(day.year, day.month, 1, tzinfo=timezone.utc)
    if day.month == 12:
        end = datetime(day.year + 1, 1, 1, tzinfo=timezone.utc)
    else:
        end = datetime(day.year, day.month + 1, 1, tzinfo=timezone.utc)
    return start, end

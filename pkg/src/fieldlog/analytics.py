"""Read-side analytics: multi-viewpoint queries, sensor windows around
messages, periodic summary reports, anomaly detection, anomaly-message
correlation, keyword stats and CSV export.

Counting rule for report axes (subject / importance / type): a message
contributes one count per distinct label among its units on that axis.
A message split for importance carries units that differ only in
importance, so it counts once by subject but once per importance level —
which is exactly how the source tables land on different totals (a
200-message corpus with 2 importance splits and 5 type splits counts
200 / 202 / 205).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Optional

from .errors import NoZoneError, ValidationError
from .lexicon import Lexicon
from .model import (
    AnomalyInterval,
    AnomalyKind,
    Importance,
    Message,
    SensorKind,
    SensorReading,
    SensorStream,
    Subject,
    TypeCode,
)
from .store import Store
from .textutil import term_match, token_match, tokenize
from .timeutil import day_bounds, format_ts, iso_week_bounds, month_bounds
from .classify import detect_pest_keywords

PERIODS = ("daily", "weekly", "monthly")

MESSAGES_CSV_HEADER = [
    "message_id",
    "recorded_at",
    "author_id",
    "zone_id",
    "subject",
    "importance",
    "type_code",
    "transcript",
]
READINGS_CSV_HEADER = ["stream_id", "timestamp", "value"]


@dataclass
class MessageFilter:
    user_id: Optional[str] = None
    time_from: Optional[datetime] = None
    time_to: Optional[datetime] = None  # half-open [from, to)
    zone_id: Optional[str] = None
    keyword: Optional[str] = None
    subject: Optional[Subject] = None
    importance_at_least: Optional[Importance] = None

    def validate(self) -> "MessageFilter":
        # from == to is a legitimate empty half-open interval; only inversion is malformed
        if self.time_from is not None and self.time_to is not None and self.time_from > self.time_to:
            raise ValidationError("inverted time range (from > to)", "time_range")
        if self.importance_at_least is not None and self.importance_at_least.level is None:
            raise ValidationError("importance_at_least must be a level L1..L5", "importance_at_least")
        return self

    def matches(self, msg: Message) -> bool:
        if self.user_id is not None and msg.author_id != self.user_id:
            return False
        if self.time_from is not None and msg.recorded_at < self.time_from:
            return False
        if self.time_to is not None and msg.recorded_at >= self.time_to:
            return False
        if self.zone_id is not None and msg.zone_id != self.zone_id:
            return False
        if self.keyword is not None and not token_match(tokenize(msg.transcript), self.keyword):
            return False
        if self.subject is not None and self.subject not in msg.subjects():
            return False
        if self.importance_at_least is not None:
            level = msg.max_importance_level()
            if level is None or level < self.importance_at_least.level:
                return False
        return True


def query_messages(store: Store, flt: MessageFilter) -> list[Message]:
    """Messages satisfying every present predicate, ordered by (recorded_at, id)."""
    flt.validate()
    candidates = store.list_messages(
        author_id=flt.user_id, zone_id=flt.zone_id, start=flt.time_from, end=flt.time_to
    )
    return [m for m in candidates if flt.matches(m)]


def sensor_window(
    store: Store, message_id: str, half_width_s: int
) -> dict[str, list[SensorReading]]:
    """Readings in the closed window [recorded_at - w, recorded_at + w] for
    every stream in the message's zone, each list time-ascending."""
    if half_width_s <= 0:
        raise ValidationError("half_width must be positive", "half_width")
    msg = store.get_message(message_id)
    if msg.zone_id is None:
        raise NoZoneError(f"message {message_id!r} has no resolved zone")
    window = timedelta(seconds=half_width_s)
    return {
        stream.id: store.list_readings(
            stream.id, start=msg.recorded_at - window, end=msg.recorded_at + window, include_end=True
        )
        for stream in store.list_streams(zone_id=msg.zone_id)
    }


@dataclass
class SummaryReport:
    period: str
    period_start: str
    message_counts_by_subject: dict[str, int]
    message_counts_by_importance: dict[str, int]
    message_counts_by_type_code: dict[str, int]
    sensor_stats: dict[str, dict]
    top_keywords: list[tuple[str, int]]
    pest_mention_count: int

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "period_start": self.period_start,
            "message_counts": {
                "by_subject": self.message_counts_by_subject,
                "by_importance": self.message_counts_by_importance,
                "by_type_code": self.message_counts_by_type_code,
            },
            "sensor_stats": self.sensor_stats,
            "top_keywords": [[token, count] for token, count in self.top_keywords],
            "pest_mention_count": self.pest_mention_count,
        }


def period_bounds(period: str, start: date) -> tuple[datetime, datetime]:
    if period == "daily":
        return day_bounds(start)
    if period == "weekly":
        lo, hi = iso_week_bounds(start)
        if lo.date() != start:
            raise ValidationError(f"weekly start must be an ISO-week Monday, got {start}", "period_start")
        return lo, hi
    if period == "monthly":
        if start.day != 1:
            raise ValidationError(f"monthly start must be the 1st, got {start}", "period_start")
        return month_bounds(start)
    raise ValidationError(f"period must be one of {PERIODS}", "period")


def summary_report(
    store: Store, lexicon: Lexicon, period: str, start: date, top_k: int = 10
) -> SummaryReport:
    lo, hi = period_bounds(period, start)
    messages = store.list_messages(start=lo, end=hi)

    by_subject = {s.value: 0 for s in Subject}
    by_importance = {i.value: 0 for i in Importance}
    by_type = {t.value: 0 for t in TypeCode}
    pest_mentions = 0
    for msg in messages:
        for value in {u.subject for u in msg.classification_units}:
            by_subject[value.value] += 1
        for value in {u.importance for u in msg.classification_units}:
            by_importance[value.value] += 1
        for value in {u.type_code for u in msg.classification_units}:
            by_type[value.value] += 1
        if detect_pest_keywords(msg.transcript, lexicon):
            pest_mentions += 1

    sensor_stats = {}
    for stream in store.list_streams():
        readings = store.list_readings(stream.id, start=lo, end=hi)
        if readings:
            values = [r.value for r in readings]
            sensor_stats[stream.id] = {
                "min": min(values),
                "max": max(values),
                "mean": sum(values) / len(values),
                "count": len(values),
            }
        else:
            sensor_stats[stream.id] = {"min": None, "max": None, "mean": None, "count": 0}

    flt = MessageFilter(time_from=lo, time_to=hi)
    return SummaryReport(
        period=period,
        period_start=start.isoformat(),
        message_counts_by_subject=by_subject,
        message_counts_by_importance=by_importance,
        message_counts_by_type_code=by_type,
        sensor_stats=sensor_stats,
        top_keywords=keyword_stats_over(messages, lexicon, top_k),
        pest_mention_count=pest_mentions,
    )


@dataclass
class DetectorParams:
    delta_threshold: float
    delta_window_s: int
    level_low: Optional[float] = None
    level_high: Optional[float] = None

    def validate(self) -> "DetectorParams":
        if self.delta_threshold <= 0:
            raise ValidationError("delta_threshold must be positive", "delta_threshold")
        if self.delta_window_s <= 0:
            raise ValidationError("delta_window must be positive", "delta_window")
        if self.level_low is not None and self.level_high is not None and self.level_low >= self.level_high:
            raise ValidationError("level_low must be below level_high", "level_low")
        return self


# configuration defaults, not claims about any real deployment
DEFAULT_DETECTOR_PARAMS: dict[SensorKind, DetectorParams] = {
    SensorKind.CO2: DetectorParams(delta_threshold=200.0, delta_window_s=1800),
    SensorKind.TEMPERATURE: DetectorParams(delta_threshold=8.0, delta_window_s=1800, level_low=0.0),
    SensorKind.HUMIDITY: DetectorParams(delta_threshold=25.0, delta_window_s=1800),
    SensorKind.SOLAR_RADIATION: DetectorParams(delta_threshold=400.0, delta_window_s=900),
    SensorKind.SOIL_MOISTURE: DetectorParams(delta_threshold=15.0, delta_window_s=1800),
}

DEFAULT_MAX_GAP_S = 6 * 3600


def _merge_intervals(raw: list[tuple[datetime, datetime, float]]) -> list[tuple[datetime, datetime, float]]:
    """Merge overlapping/touching [start, end] spans, keeping the max magnitude."""
    merged: list[list] = []
    for start, end, mag in sorted(raw):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
            merged[-1][2] = max(merged[-1][2], mag)
        else:
            merged.append([start, end, mag])
    return [(s, e, m) for s, e, m in merged]


def detect_anomalies(
    store: Store,
    stream_id: str,
    start: datetime | None,
    end: datetime | None,
    params: DetectorParams,
) -> list[AnomalyInterval]:
    """SharpChange: reading pairs within delta_window whose value difference
    reaches delta_threshold, merged to maximal intervals with magnitude the
    largest difference seen. LevelBreach: maximal runs below level_low or
    above level_high (a one-reading run gets a 1 s interval so start < end).
    """
    params.validate()
    readings = store.list_readings(stream_id, start=start, end=end)
    out: list[AnomalyInterval] = []

    raw: list[tuple[datetime, datetime, float]] = []
    window = timedelta(seconds=params.delta_window_s)
    left = 0
    for j in range(len(readings)):
        while readings[j].at - readings[left].at > window:
            left += 1
        for i in range(left, j):
            diff = abs(readings[j].value - readings[i].value)
            if diff >= params.delta_threshold:
                raw.append((readings[i].at, readings[j].at, diff))
    for s, e, mag in _merge_intervals(raw):
        out.append(
            AnomalyInterval(
                stream_id=stream_id,
                start=s,
                end=e,
                kind=AnomalyKind.SHARP_CHANGE,
                magnitude=mag,
                threshold_used=params.delta_threshold,
            ).validate()
        )

    for threshold, breaches in (
        (params.level_low, lambda v: v < params.level_low),
        (params.level_high, lambda v: v > params.level_high),
    ):
        if threshold is None:
            continue
        run: list[SensorReading] = []
        for reading in readings + [None]:
            if reading is not None and breaches(reading.value):
                run.append(reading)
                continue
            if run:
                end_at = max(run[-1].at, run[0].at + timedelta(seconds=1))
                out.append(
                    AnomalyInterval(
                        stream_id=stream_id,
                        start=run[0].at,
                        end=end_at,
                        kind=AnomalyKind.LEVEL_BREACH,
                        magnitude=max(abs(r.value - threshold) for r in run),
                        threshold_used=threshold,
                    ).validate()
                )
                run = []

    out.sort(key=lambda a: (a.start, a.end, a.kind.value))
    return out


@dataclass
class CorrelationPair:
    anomaly: AnomalyInterval
    message_id: str
    lag_s: int  # recorded_at minus the nearest point of [start, end]
    keyword_hit: bool

    def to_dict(self) -> dict:
        return {
            "anomaly": self.anomaly.to_dict(),
            "message_id": self.message_id,
            "lag_s": self.lag_s,
            "keyword_hit": self.keyword_hit,
        }


def correlate(
    anomalies: list[AnomalyInterval],
    messages: list[Message],
    streams: dict[str, SensorStream],
    lexicon: Lexicon,
    max_gap_s: int = DEFAULT_MAX_GAP_S,
) -> list[CorrelationPair]:
    """Pair every anomaly with every same-zone message within max_gap of the
    interval. keyword_hit marks transcripts mentioning a term for the
    anomaly's sensor kind. Sorted by |lag| (then stream, start, message id).
    """
    if max_gap_s <= 0:
        raise ValidationError("max_gap must be positive", "max_gap")
    pairs: list[CorrelationPair] = []
    for anomaly in sorted(anomalies, key=lambda a: (a.stream_id, a.start, a.end, a.kind.value)):
        stream = streams.get(anomaly.stream_id)
        if stream is None:
            continue
        terms = lexicon.kind_terms.get(stream.kind, [])
        for msg in sorted(messages, key=lambda m: m.id):
            if msg.zone_id != stream.zone_id:
                continue
            if msg.recorded_at < anomaly.start:
                lag = -int((anomaly.start - msg.recorded_at).total_seconds())
            elif msg.recorded_at > anomaly.end:
                lag = int((msg.recorded_at - anomaly.end).total_seconds())
            else:
                lag = 0
            if abs(lag) > max_gap_s:
                continue
            tokens = tokenize(msg.transcript)
            hit = any(term_match(msg.transcript, term, tokens) for term in terms)
            pairs.append(CorrelationPair(anomaly=anomaly, message_id=msg.id, lag_s=lag, keyword_hit=hit))
    pairs.sort(key=lambda p: (abs(p.lag_s), p.anomaly.stream_id, p.anomaly.start, p.message_id))
    return pairs


def keyword_stats_over(messages: list[Message], lexicon: Lexicon, k: int) -> list[tuple[str, int]]:
    if k < 1:
        raise ValidationError("k must be >= 1", "k")
    counts: dict[str, int] = {}
    for msg in messages:
        for token in tokenize(msg.transcript):
            if token in lexicon.stopwords:
                continue
            counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def keyword_stats(store: Store, lexicon: Lexicon, flt: MessageFilter, k: int) -> list[tuple[str, int]]:
    """Top-k (token, count) over matching transcripts; count desc, token asc."""
    return keyword_stats_over(query_messages(store, flt), lexicon, k)


def format_value(value: float) -> str:
    """Positional decimal that round-trips through the CSV value grammar."""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    text = repr(value)
    if "e" in text or "E" in text:
        text = format(value, ".17f").rstrip("0")
        if text.endswith("."):
            text += "0"
    return text


def export_messages_csv(store: Store, flt: MessageFilter) -> str:
    """One row per classification unit, RFC 4180, sorted by timestamp then id."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(MESSAGES_CSV_HEADER)
    for msg in query_messages(store, flt):
        for unit in msg.classification_units:
            writer.writerow(
                [
                    msg.id,
                    format_ts(msg.recorded_at),
                    msg.author_id,
                    msg.zone_id if msg.zone_id is not None else "",
                    unit.subject.value,
                    unit.importance.value,
                    unit.type_code.value,
                    msg.transcript,
                ]
            )
    return buf.getvalue()


def export_readings_csv(
    store: Store,
    stream_id: str | None = None,
    start: datetime | None = None,
    end: datetime | None = None,
) -> str:
    """Readings as the exact sensor-ingest format (re-ingest inserts 0)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(READINGS_CSV_HEADER)
    with store.snapshot():
        streams = [stream_id] if stream_id is not None else sorted(s.id for s in store.list_streams())
        rows = []
        for sid in streams:
            for r in store.list_readings(sid, start=start, end=end):
                rows.append((format_ts(r.at), r.stream_id, format_value(r.value)))
    rows.sort()
    for at, sid, value in rows:
        writer.writerow([sid, at, value])
    return buf.getvalue()

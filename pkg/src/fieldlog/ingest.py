"""Intake paths: message submissions and sensor CSV files.

Zone resolution: a registered beacon always wins (beacons mark indoor
spots where GPS is unreliable); otherwise the GPS point is tested against
zone geofences with the boundary-inclusive even-odd rule. When several
geofences contain the point, the smallest-area zone wins, ties going to
the lexicographically smallest zone id. No signal -> Unzoned (None).
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Optional

from . import geo
from .classify import rule_unit
from .errors import ValidationError
from .lexicon import Lexicon
from .model import Message, RawLocation, SensorReading, Zone, parse_gps
from .routing import pending_records
from .store import Store
from .timeutil import format_ts, now_utc, parse_ts
from .transcribe import TranscriptionAdapter

logger = logging.getLogger(__name__)

SENSOR_CSV_HEADER = ["stream_id", "timestamp", "value"]

# decimal literal with optional sign and fraction; no exponent form
_VALUE_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")

DEFAULT_CLOCK_SKEW_S = 300


@dataclass
class MessageSubmission:
    author_id: str
    recorded_at: datetime
    gps: Optional[tuple[float, float]] = None
    beacon_id: Optional[str] = None
    transcript: Optional[str] = None
    audio_ref: Optional[str] = None
    id: Optional[str] = None  # caller-supplied for deterministic replay; else assigned

    def validate(self) -> "MessageSubmission":
        if not self.author_id:
            raise ValidationError("author_id must be non-empty", "author_id")
        if (self.transcript is None or not self.transcript.strip()) and self.audio_ref is None:
            raise ValidationError("one of transcript or audio_ref is required", "transcript")
        if self.gps is not None:
            self.gps = parse_gps(self.gps, "gps")
        return self

    def to_dict(self) -> dict:
        out = {
            "author_id": self.author_id,
            "recorded_at": format_ts(self.recorded_at),
            "gps": list(self.gps) if self.gps else None,
            "beacon_id": self.beacon_id,
            "transcript": self.transcript,
            "audio_ref": self.audio_ref,
        }
        if self.id is not None:
            out["id"] = self.id
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MessageSubmission":
        gps = d.get("gps")
        return cls(
            author_id=d.get("author_id", ""),
            recorded_at=parse_ts(d["recorded_at"], "recorded_at") if d.get("recorded_at") else now_utc(),
            gps=tuple(gps) if gps else None,
            beacon_id=d.get("beacon_id"),
            transcript=d.get("transcript"),
            audio_ref=d.get("audio_ref"),
            id=str(d["id"]) if d.get("id") is not None else None,
        )


def resolve_location(
    gps: Optional[tuple[float, float]],
    beacon_id: Optional[str],
    zones: list[Zone],
) -> tuple[Optional[str], list[str]]:
    """Resolve a submission's location to a zone id (None = Unzoned).

    Returns (zone_id, warnings). An unregistered beacon is not an error —
    the submission is still accepted Unzoned with a warning recorded.
    """
    warnings: list[str] = []
    if beacon_id is not None:
        for zone in zones:
            if beacon_id in zone.beacon_ids:
                return zone.id, warnings
        warnings.append(f"unknown beacon {beacon_id!r}")
        logger.warning("unknown beacon %r; falling back to Unzoned", beacon_id)
    if gps is not None:
        point = parse_gps(gps, "gps")
        containing = [
            zone
            for zone in zones
            if zone.geofence is not None and geo.point_in_polygon(point, zone.geofence)
        ]
        if containing:
            containing.sort(key=lambda z: (geo.polygon_area(z.geofence), z.id))
            return containing[0].id, warnings
    return None, warnings


def ingest_message(
    store: Store,
    lexicon: Lexicon,
    submission: MessageSubmission,
    transcriber: TranscriptionAdapter | None = None,
    clock_skew_s: int = DEFAULT_CLOCK_SKEW_S,
) -> Message:
    """Full intake: transcript (direct or via the adapter), zone resolution,
    rule classification, then one transaction appending the message with its
    delivery records. Nothing is persisted on any failure."""
    submission.validate()
    if not store.has_user(submission.author_id):
        raise ValidationError(f"unknown author {submission.author_id!r}", "author_id")

    created_at = now_utc()
    recorded_at = submission.recorded_at
    if recorded_at > created_at + timedelta(seconds=clock_skew_s):
        raise ValidationError(
            f"recorded_at {format_ts(recorded_at)} is beyond the {clock_skew_s}s clock-skew allowance",
            "recorded_at",
        )

    transcript = submission.transcript
    confidence = None
    if transcript is None or not transcript.strip():
        if transcriber is None:
            raise ValidationError("no transcript and no transcription adapter configured", "transcript")
        result = transcriber.transcribe(submission.audio_ref)
        transcript, confidence = result.text, result.confidence
        if not transcript.strip():
            raise ValidationError("transcription produced an empty transcript", "transcript")

    zone_id, _warnings = resolve_location(submission.gps, submission.beacon_id, store.list_zones())

    message = Message(
        id=submission.id if submission.id is not None else store.next_message_id(),
        author_id=submission.author_id,
        recorded_at=recorded_at,
        raw_location=RawLocation(gps=submission.gps, beacon_id=submission.beacon_id),
        zone_id=zone_id,
        transcript=transcript,
        audio_ref=submission.audio_ref,
        transcription_confidence=confidence,
        classification_units=[rule_unit(transcript, lexicon)],
        created_at=max(created_at, recorded_at),
    )
    records = pending_records(message, store.list_subscriptions())
    return store.append_message(message, records)


@dataclass
class CsvIngestReport:
    inserted: int = 0
    skipped_duplicates: int = 0
    row_errors: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "inserted": self.inserted,
            "skipped_duplicates": self.skipped_duplicates,
            "row_errors": [{"line": line, "reason": reason} for line, reason in self.row_errors],
        }


def ingest_sensor_csv(store: Store, data: bytes | str, batch_size: int = 2000) -> CsvIngestReport:
    """Ingest a ``stream_id,timestamp,value`` CSV (RFC 4180, LF or CRLF).

    Valid rows upsert idempotently; bad rows are reported by line number and
    skipped. A wrong header fails the whole file with nothing ingested.
    Restartable: re-running the same file inserts 0.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValidationError(f"file is not UTF-8: {exc}", "file")
    else:
        text = data
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty file (missing header)", "file")
    if header != SENSOR_CSV_HEADER:
        raise ValidationError(
            f"header must be exactly {','.join(SENSOR_CSV_HEADER)!r}, got {','.join(header)!r}", "file"
        )

    report = CsvIngestReport()
    known_streams = {s.id for s in store.list_streams()}
    seen_in_file: set[tuple[str, str]] = set()
    batch: list[SensorReading] = []

    def flush():
        if batch:
            report.inserted += store.insert_readings(batch)
            batch.clear()

    for row in reader:
        line_no = reader.line_num
        if not row:
            continue
        if len(row) != 3:
            report.row_errors.append((line_no, f"expected 3 fields, got {len(row)}"))
            continue
        stream_id, ts_raw, value_raw = row
        if stream_id not in known_streams:
            report.row_errors.append((line_no, f"unknown stream_id {stream_id!r}"))
            continue
        try:
            at = parse_ts(ts_raw, "timestamp")
        except ValidationError as exc:
            report.row_errors.append((line_no, exc.message))
            continue
        if not _VALUE_RE.match(value_raw.strip()):
            report.row_errors.append((line_no, f"invalid value {value_raw!r}"))
            continue
        value = float(value_raw)
        if not math.isfinite(value):
            report.row_errors.append((line_no, f"non-finite value {value_raw!r}"))
            continue
        key = (stream_id, format_ts(at))
        if key in seen_in_file:
            report.skipped_duplicates += 1
            continue
        seen_in_file.add(key)
        batch.append(SensorReading(stream_id=stream_id, at=at, value=value))
        if len(batch) >= batch_size:
            flush()
    flush()
    # rows that survived parsing but were already present in storage
    report.skipped_duplicates += len(seen_in_file) - report.inserted
    return report

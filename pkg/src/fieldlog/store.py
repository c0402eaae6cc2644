"""Embedded, file-backed store (SQLite).

Contract highlights:
- puts are validated; invalid entities never reach disk
- a Message and its DeliveryRecords are appended in one transaction
- sensor readings upsert idempotently on (stream_id, at); duplicates count 0
- safe for concurrent readers with writes serialized through a process lock;
  readers never block writers (WAL), and ``snapshot()`` pins a consistent
  view for long reads such as exports

``crash_hook`` exists for fault-injection tests: when set, it is invoked
with a label at every step inside the append transaction so a harness can
kill or abort the process between writes.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import geo
from .errors import ConflictError, NotFoundError, ValidationError
from .model import (
    ClassificationUnit,
    DeliveryRecord,
    DeliveryState,
    Message,
    RawLocation,
    SensorReading,
    SensorStream,
    SubscriptionRule,
    User,
    Zone,
)
from .timeutil import format_ts, now_utc, parse_ts

_SCHEMA = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    id TEXT PRIMARY KEY,
    display_name TEXT NOT NULL,
    role TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS zones (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    geofence TEXT,
    beacon_ids TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS streams (
    id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    zone_id TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS readings (
    stream_id TEXT NOT NULL,
    at TEXT NOT NULL,
    value REAL NOT NULL,
    PRIMARY KEY (stream_id, at)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS messages (
    id TEXT PRIMARY KEY,
    author_id TEXT NOT NULL,
    recorded_at TEXT NOT NULL,
    raw_lat REAL,
    raw_lon REAL,
    raw_beacon TEXT,
    zone_id TEXT,
    transcript TEXT NOT NULL,
    audio_ref TEXT,
    transcription_confidence REAL,
    created_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_messages_order ON messages (recorded_at, id);
CREATE TABLE IF NOT EXISTS units (
    message_id TEXT NOT NULL,
    idx INTEGER NOT NULL,
    subject TEXT NOT NULL,
    importance TEXT NOT NULL,
    type_code TEXT NOT NULL,
    source TEXT NOT NULL,
    PRIMARY KEY (message_id, idx)
);
CREATE TABLE IF NOT EXISTS deliveries (
    message_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    state TEXT NOT NULL,
    attempts INTEGER NOT NULL DEFAULT 0,
    last_attempt_at TEXT,
    PRIMARY KEY (message_id, user_id)
);
CREATE INDEX IF NOT EXISTS idx_deliveries_user ON deliveries (user_id, state);
CREATE TABLE IF NOT EXISTS subscriptions (
    id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    subject_filter TEXT,
    zone_filter TEXT,
    keyword_filter TEXT,
    min_importance TEXT
);
"""


class Store:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._local = threading.local()
        self._write_lock = threading.RLock()
        self.crash_hook: Optional[Callable[[str], None]] = None
        with self._write_lock:
            self._conn().executescript(_SCHEMA)  # executescript manages its own transaction

    def _conn(self) -> sqlite3.Connection:
        conn = getattr(self._local, "conn", None)
        if conn is None:
            conn = sqlite3.connect(self.path, isolation_level=None, timeout=30.0)
            conn.execute("PRAGMA journal_mode=WAL")
            conn.execute("PRAGMA synchronous=FULL")
            conn.execute("PRAGMA foreign_keys=ON")
            conn.row_factory = sqlite3.Row
            self._local.conn = conn
        return conn

    def close(self):
        conn = getattr(self._local, "conn", None)
        if conn is not None:
            conn.close()
            self._local.conn = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @contextmanager
    def _write(self):
        """Serialized write transaction (BEGIN IMMEDIATE .. COMMIT/ROLLBACK)."""
        with self._write_lock:
            conn = self._conn()
            conn.execute("BEGIN IMMEDIATE")
            try:
                yield conn
            except BaseException:
                try:
                    conn.execute("ROLLBACK")
                except sqlite3.Error:
                    pass
                raise
            self._hook("pre_commit")
            conn.execute("COMMIT")
            self._hook("post_commit")

    @contextmanager
    def snapshot(self):
        """Pin a consistent read view for the duration (WAL snapshot)."""
        conn = self._conn()
        conn.execute("BEGIN")
        try:
            yield conn
        finally:
            conn.execute("COMMIT")

    def _hook(self, label: str):
        if self.crash_hook is not None:
            self.crash_hook(label)

    # -- users ---------------------------------------------------------------

    def put_user(self, user: User) -> User:
        user.validate()
        with self._write() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO users (id, display_name, role) VALUES (?, ?, ?)",
                (user.id, user.display_name, user.role.value),
            )
        return user

    def get_user(self, user_id: str) -> User:
        row = self._conn().execute("SELECT * FROM users WHERE id = ?", (user_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no user {user_id!r}")
        return User.from_dict(dict(row))

    def has_user(self, user_id: str) -> bool:
        return self._conn().execute("SELECT 1 FROM users WHERE id = ?", (user_id,)).fetchone() is not None

    def list_users(self) -> list[User]:
        rows = self._conn().execute("SELECT * FROM users ORDER BY id").fetchall()
        return [User.from_dict(dict(r)) for r in rows]

    def delete_user(self, user_id: str):
        with self._write() as conn:
            cur = conn.execute("DELETE FROM users WHERE id = ?", (user_id,))
            if cur.rowcount == 0:
                raise NotFoundError(f"no user {user_id!r}")

    # -- zones ---------------------------------------------------------------

    def put_zone(self, zone: Zone) -> Zone:
        zone.validate()
        if zone.geofence is not None:
            geo.validate_geofence(zone.geofence)
        with self._write() as conn:
            for row in conn.execute("SELECT id, beacon_ids FROM zones WHERE id != ?", (zone.id,)):
                clash = zone.beacon_ids & set(json.loads(row["beacon_ids"]))
                if clash:
                    raise ValidationError(
                        f"beacon ids {sorted(clash)} already registered to zone {row['id']!r}",
                        "beacon_ids",
                    )
            conn.execute(
                "INSERT OR REPLACE INTO zones (id, name, geofence, beacon_ids) VALUES (?, ?, ?, ?)",
                (
                    zone.id,
                    zone.name,
                    json.dumps([list(v) for v in zone.geofence]) if zone.geofence is not None else None,
                    json.dumps(sorted(zone.beacon_ids)),
                ),
            )
        return zone

    @staticmethod
    def _zone_from_row(row) -> Zone:
        fence = json.loads(row["geofence"]) if row["geofence"] is not None else None
        return Zone(
            id=row["id"],
            name=row["name"],
            geofence=[(float(v[0]), float(v[1])) for v in fence] if fence is not None else None,
            beacon_ids=set(json.loads(row["beacon_ids"])),
        )

    def get_zone(self, zone_id: str) -> Zone:
        row = self._conn().execute("SELECT * FROM zones WHERE id = ?", (zone_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no zone {zone_id!r}")
        return self._zone_from_row(row)

    def has_zone(self, zone_id: str) -> bool:
        return self._conn().execute("SELECT 1 FROM zones WHERE id = ?", (zone_id,)).fetchone() is not None

    def list_zones(self) -> list[Zone]:
        rows = self._conn().execute("SELECT * FROM zones ORDER BY id").fetchall()
        return [self._zone_from_row(r) for r in rows]

    def delete_zone(self, zone_id: str):
        with self._write() as conn:
            cur = conn.execute("DELETE FROM zones WHERE id = ?", (zone_id,))
            if cur.rowcount == 0:
                raise NotFoundError(f"no zone {zone_id!r}")

    # -- streams -------------------------------------------------------------

    def put_stream(self, stream: SensorStream) -> SensorStream:
        stream.validate()
        if not self.has_zone(stream.zone_id):
            raise ValidationError(f"unknown zone {stream.zone_id!r}", "zone_id")
        with self._write() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO streams (id, kind, zone_id, description) VALUES (?, ?, ?, ?)",
                (stream.id, stream.kind.value, stream.zone_id, stream.description),
            )
        return stream

    def get_stream(self, stream_id: str) -> SensorStream:
        row = self._conn().execute("SELECT * FROM streams WHERE id = ?", (stream_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no stream {stream_id!r}")
        return SensorStream.from_dict(dict(row))

    def has_stream(self, stream_id: str) -> bool:
        return self._conn().execute("SELECT 1 FROM streams WHERE id = ?", (stream_id,)).fetchone() is not None

    def list_streams(self, zone_id: str | None = None) -> list[SensorStream]:
        if zone_id is None:
            rows = self._conn().execute("SELECT * FROM streams ORDER BY id").fetchall()
        else:
            rows = self._conn().execute("SELECT * FROM streams WHERE zone_id = ? ORDER BY id", (zone_id,)).fetchall()
        return [SensorStream.from_dict(dict(r)) for r in rows]

    def delete_stream(self, stream_id: str):
        with self._write() as conn:
            cur = conn.execute("DELETE FROM streams WHERE id = ?", (stream_id,))
            if cur.rowcount == 0:
                raise NotFoundError(f"no stream {stream_id!r}")

    # -- subscriptions ---------------------------------------------------------

    def put_subscription(self, rule: SubscriptionRule) -> SubscriptionRule:
        rule.validate()
        with self._write() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO subscriptions"
                " (id, user_id, subject_filter, zone_filter, keyword_filter, min_importance)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (
                    rule.id,
                    rule.user_id,
                    json.dumps(sorted(s.value for s in rule.subject_filter)) if rule.subject_filter else None,
                    json.dumps(sorted(rule.zone_filter)) if rule.zone_filter else None,
                    json.dumps(sorted(rule.keyword_filter)) if rule.keyword_filter else None,
                    rule.min_importance.value if rule.min_importance else None,
                ),
            )
        return rule

    @staticmethod
    def _rule_from_row(row) -> SubscriptionRule:
        d = dict(row)
        for key in ("subject_filter", "zone_filter", "keyword_filter"):
            d[key] = json.loads(d[key]) if d[key] is not None else None
        return SubscriptionRule.from_dict(d)

    def get_subscription(self, rule_id: str) -> SubscriptionRule:
        row = self._conn().execute("SELECT * FROM subscriptions WHERE id = ?", (rule_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no subscription {rule_id!r}")
        return self._rule_from_row(row)

    def list_subscriptions(self) -> list[SubscriptionRule]:
        rows = self._conn().execute("SELECT * FROM subscriptions ORDER BY id").fetchall()
        return [self._rule_from_row(r) for r in rows]

    def delete_subscription(self, rule_id: str):
        with self._write() as conn:
            cur = conn.execute("DELETE FROM subscriptions WHERE id = ?", (rule_id,))
            if cur.rowcount == 0:
                raise NotFoundError(f"no subscription {rule_id!r}")

    def next_subscription_id(self) -> str:
        return f"sub{self._next_seq('subscription_seq'):04d}"

    # -- sensor readings -------------------------------------------------------

    def insert_readings(self, readings: Iterable[SensorReading]) -> int:
        """Idempotent upsert; returns the number actually inserted."""
        rows = []
        for r in readings:
            r.validate()
            rows.append((r.stream_id, format_ts(r.at), float(r.value)))
        if not rows:
            return 0
        with self._write() as conn:
            before = conn.total_changes
            conn.executemany("INSERT OR IGNORE INTO readings (stream_id, at, value) VALUES (?, ?, ?)", rows)
            return conn.total_changes - before

    def list_readings(
        self,
        stream_id: str,
        start: datetime | None = None,
        end: datetime | None = None,
        include_end: bool = False,
    ) -> list[SensorReading]:
        """Readings for one stream, time-ascending. [start, end) by default;
        ``include_end`` makes the range closed (sensor windows)."""
        sql = "SELECT * FROM readings WHERE stream_id = ?"
        args: list = [stream_id]
        if start is not None:
            sql += " AND at >= ?"
            args.append(format_ts(start))
        if end is not None:
            sql += " AND at <= ?" if include_end else " AND at < ?"
            args.append(format_ts(end))
        sql += " ORDER BY at"
        rows = self._conn().execute(sql, args).fetchall()
        return [SensorReading(stream_id=r["stream_id"], at=parse_ts(r["at"]), value=r["value"]) for r in rows]

    def count_readings(self) -> int:
        return self._conn().execute("SELECT COUNT(*) AS n FROM readings").fetchone()["n"]

    # -- messages ----------------------------------------------------------------

    def next_message_id(self) -> str:
        return f"m{self._next_seq('message_seq'):06d}"

    def _next_seq(self, key: str) -> int:
        with self._write() as conn:
            row = conn.execute("SELECT value FROM meta WHERE key = ?", (key,)).fetchone()
            value = int(row["value"]) + 1 if row else 1
            conn.execute("INSERT OR REPLACE INTO meta (key, value) VALUES (?, ?)", (key, str(value)))
            return value

    def append_message(self, message: Message, deliveries: list[DeliveryRecord]) -> Message:
        """Atomically persist a message together with its delivery records."""
        message.validate()
        for rec in deliveries:
            if rec.message_id != message.id:
                raise ValidationError("delivery record belongs to a different message", "deliveries")
        with self._write() as conn:
            exists = conn.execute("SELECT 1 FROM messages WHERE id = ?", (message.id,)).fetchone()
            if exists:
                raise ConflictError(f"message {message.id!r} already exists")
            conn.execute(
                "INSERT INTO messages (id, author_id, recorded_at, raw_lat, raw_lon, raw_beacon,"
                " zone_id, transcript, audio_ref, transcription_confidence, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    message.id,
                    message.author_id,
                    format_ts(message.recorded_at),
                    message.raw_location.gps[0] if message.raw_location.gps else None,
                    message.raw_location.gps[1] if message.raw_location.gps else None,
                    message.raw_location.beacon_id,
                    message.zone_id,
                    message.transcript,
                    message.audio_ref,
                    message.transcription_confidence,
                    format_ts(message.created_at),
                ),
            )
            self._hook("message_inserted")
            for idx, unit in enumerate(message.classification_units):
                conn.execute(
                    "INSERT INTO units (message_id, idx, subject, importance, type_code, source)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (message.id, idx, unit.subject.value, unit.importance.value, unit.type_code.value, unit.source.value),
                )
                self._hook("unit_inserted")
            for rec in deliveries:
                conn.execute(
                    "INSERT OR IGNORE INTO deliveries (message_id, user_id, state, attempts, last_attempt_at)"
                    " VALUES (?, ?, ?, ?, ?)",
                    (
                        rec.message_id,
                        rec.user_id,
                        rec.state.value,
                        rec.attempts,
                        format_ts(rec.last_attempt_at) if rec.last_attempt_at else None,
                    ),
                )
                self._hook("delivery_inserted")
        return message

    def _message_from_row(self, row, units: list[ClassificationUnit]) -> Message:
        gps = None
        if row["raw_lat"] is not None and row["raw_lon"] is not None:
            gps = (row["raw_lat"], row["raw_lon"])
        return Message(
            id=row["id"],
            author_id=row["author_id"],
            recorded_at=parse_ts(row["recorded_at"]),
            raw_location=RawLocation(gps=gps, beacon_id=row["raw_beacon"]),
            zone_id=row["zone_id"],
            transcript=row["transcript"],
            audio_ref=row["audio_ref"],
            transcription_confidence=row["transcription_confidence"],
            classification_units=units,
            created_at=parse_ts(row["created_at"]),
        )

    def _units_for(self, conn, message_id: str) -> list[ClassificationUnit]:
        rows = conn.execute("SELECT * FROM units WHERE message_id = ? ORDER BY idx", (message_id,)).fetchall()
        return [ClassificationUnit.from_dict(dict(r)) for r in rows]

    def get_message(self, message_id: str) -> Message:
        conn = self._conn()
        row = conn.execute("SELECT * FROM messages WHERE id = ?", (message_id,)).fetchone()
        if row is None:
            raise NotFoundError(f"no message {message_id!r}")
        return self._message_from_row(row, self._units_for(conn, message_id))

    def has_message(self, message_id: str) -> bool:
        return self._conn().execute("SELECT 1 FROM messages WHERE id = ?", (message_id,)).fetchone() is not None

    def list_messages(
        self,
        author_id: str | None = None,
        zone_id: str | None = None,
        start: datetime | None = None,
        end: datetime | None = None,
    ) -> list[Message]:
        """Messages ordered by (recorded_at, id); time range is half-open."""
        sql = "SELECT * FROM messages WHERE 1=1"
        args: list = []
        if author_id is not None:
            sql += " AND author_id = ?"
            args.append(author_id)
        if zone_id is not None:
            sql += " AND zone_id = ?"
            args.append(zone_id)
        if start is not None:
            sql += " AND recorded_at >= ?"
            args.append(format_ts(start))
        if end is not None:
            sql += " AND recorded_at < ?"
            args.append(format_ts(end))
        sql += " ORDER BY recorded_at, id"
        conn = self._conn()
        rows = conn.execute(sql, args).fetchall()
        unit_map: dict[str, list] = {}
        for r in conn.execute("SELECT * FROM units ORDER BY message_id, idx"):
            unit_map.setdefault(r["message_id"], []).append(ClassificationUnit.from_dict(dict(r)))
        return [self._message_from_row(r, unit_map.get(r["id"], [])) for r in rows]

    def replace_units(self, message_id: str, units: list[ClassificationUnit]) -> Message:
        if not units:
            raise ValidationError("at least one classification unit required", "classification_units")
        with self._write() as conn:
            if conn.execute("SELECT 1 FROM messages WHERE id = ?", (message_id,)).fetchone() is None:
                raise NotFoundError(f"no message {message_id!r}")
            conn.execute("DELETE FROM units WHERE message_id = ?", (message_id,))
            for idx, unit in enumerate(units):
                conn.execute(
                    "INSERT INTO units (message_id, idx, subject, importance, type_code, source)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (message_id, idx, unit.subject.value, unit.importance.value, unit.type_code.value, unit.source.value),
                )
        return self.get_message(message_id)

    # -- deliveries -----------------------------------------------------------

    def add_deliveries_if_missing(self, message_id: str, user_ids: Iterable[str]) -> int:
        """Insert Pending records that do not exist yet; never duplicates."""
        with self._write() as conn:
            before = conn.total_changes
            for uid in user_ids:
                conn.execute(
                    "INSERT OR IGNORE INTO deliveries (message_id, user_id, state, attempts) VALUES (?, ?, ?, 0)",
                    (message_id, uid, DeliveryState.PENDING.value),
                )
            return conn.total_changes - before

    def get_delivery(self, message_id: str, user_id: str) -> DeliveryRecord:
        row = self._conn().execute(
            "SELECT * FROM deliveries WHERE message_id = ? AND user_id = ?", (message_id, user_id)
        ).fetchone()
        if row is None:
            raise NotFoundError(f"no delivery of {message_id!r} to {user_id!r}")
        return DeliveryRecord.from_dict(dict(row))

    def list_deliveries(self, message_id: str | None = None, user_id: str | None = None) -> list[DeliveryRecord]:
        sql = "SELECT * FROM deliveries WHERE 1=1"
        args: list = []
        if message_id is not None:
            sql += " AND message_id = ?"
            args.append(message_id)
        if user_id is not None:
            sql += " AND user_id = ?"
            args.append(user_id)
        sql += " ORDER BY message_id, user_id"
        rows = self._conn().execute(sql, args).fetchall()
        return [DeliveryRecord.from_dict(dict(r)) for r in rows]

    def mark_delivered(self, message_id: str, user_id: str) -> DeliveryRecord:
        """Pending -> Delivered (idempotent for already-delivered records);
        bumps the attempt counter either way."""
        at = format_ts(now_utc())
        with self._write() as conn:
            cur = conn.execute(
                "UPDATE deliveries SET state = CASE state WHEN 'Pending' THEN 'Delivered' ELSE state END,"
                " attempts = attempts + 1, last_attempt_at = ?"
                " WHERE message_id = ? AND user_id = ? AND state != 'Acknowledged'",
                (at, message_id, user_id),
            )
            if cur.rowcount == 0 and not self._delivery_exists(conn, message_id, user_id):
                raise NotFoundError(f"no delivery of {message_id!r} to {user_id!r}")
        return self.get_delivery(message_id, user_id)

    def acknowledge(self, message_id: str, user_id: str) -> DeliveryRecord:
        """Any state -> Acknowledged; idempotent."""
        with self._write() as conn:
            if not self._delivery_exists(conn, message_id, user_id):
                raise NotFoundError(f"no delivery of {message_id!r} to {user_id!r}")
            conn.execute(
                "UPDATE deliveries SET state = 'Acknowledged' WHERE message_id = ? AND user_id = ?",
                (message_id, user_id),
            )
        return self.get_delivery(message_id, user_id)

    @staticmethod
    def _delivery_exists(conn, message_id: str, user_id: str) -> bool:
        return conn.execute(
            "SELECT 1 FROM deliveries WHERE message_id = ? AND user_id = ?", (message_id, user_id)
        ).fetchone() is not None

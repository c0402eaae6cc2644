"""Domain types: messages, classification labels, sensors, zones, users, rules.

Serialization contract: every type round-trips through ``to_dict``/**``from_dict``
field-for-field, with timestamps as ``YYYY-MM-DDTHH:MM:SSZ`` strings and enums
as their wire names. Validation raises ValidationError with a field path.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Optional

from .errors import ValidationError
from .timeutil import as_utc_second, format_ts, parse_ts


class Subject(str, Enum):
    FARM_PRODUCTS = "FarmProducts"
    EQUIPMENT = "Equipment"
    SALES_MARKETING = "SalesMarketing"
    ENVIRONMENT = "Environment"
    SYSTEM = "System"
    OTHERS = "Others"


class Importance(str, Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"
    L5 = "L5"
    UNCLASSIFIED = "Unclassified"

    @property
    def level(self) -> int | None:
        """Numeric level for ordering; Unclassified has none."""
        if self is Importance.UNCLASSIFIED:
            return None
        return int(self.value[1])


class TypeCode(str, Enum):
    A0 = "A0"
    A1 = "A1"
    A2 = "A2"
    B0 = "B0"
    B1 = "B1"
    B2 = "B2"
    C1 = "C1"
    C2 = "C2"
    UNCLASSIFIED = "Unclassified"


class LabelSource(str, Enum):
    RULE = "Rule"
    MANUAL = "Manual"


class SensorKind(str, Enum):
    TEMPERATURE = "Temperature"
    HUMIDITY = "Humidity"
    CO2 = "CO2"
    SOLAR_RADIATION = "SolarRadiation"
    SOIL_MOISTURE = "SoilMoisture"

    @property
    def unit(self) -> str:
        return _SENSOR_UNITS[self]


_SENSOR_UNITS = {
    SensorKind.TEMPERATURE: "°C",
    SensorKind.HUMIDITY: "%RH",
    SensorKind.CO2: "ppm",
    SensorKind.SOLAR_RADIATION: "W/m²",
    SensorKind.SOIL_MOISTURE: "%",
}


class Role(str, Enum):
    OWNER = "Owner"
    WORKER = "Worker"
    ADVISOR = "Advisor"


class DeliveryState(str, Enum):
    PENDING = "Pending"
    DELIVERED = "Delivered"
    ACKNOWLEDGED = "Acknowledged"


class AnomalyKind(str, Enum):
    SHARP_CHANGE = "SharpChange"
    LEVEL_BREACH = "LevelBreach"


# C0 controls other than tab/LF/CR: not representable in the CSV export contract
_FORBIDDEN_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]")


def parse_enum(enum_cls, value, field_path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ValidationError(f"expected one of [{allowed}], got {value!r}", field_path)


@dataclass
class ClassificationUnit:
    subject: Subject
    importance: Importance = Importance.UNCLASSIFIED
    type_code: TypeCode = TypeCode.UNCLASSIFIED
    source: LabelSource = LabelSource.RULE

    def to_dict(self) -> dict:
        return {
            "subject": self.subject.value,
            "importance": self.importance.value,
            "type_code": self.type_code.value,
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, d: dict, field_path: str = "classification_unit") -> "ClassificationUnit":
        return cls(
            subject=parse_enum(Subject, d.get("subject"), f"{field_path}.subject"),
            importance=parse_enum(Importance, d.get("importance", "Unclassified"), f"{field_path}.importance"),
            type_code=parse_enum(TypeCode, d.get("type_code", "Unclassified"), f"{field_path}.type_code"),
            source=parse_enum(LabelSource, d.get("source", "Rule"), f"{field_path}.source"),
        )


@dataclass
class RawLocation:
    gps: Optional[tuple[float, float]] = None  # (lat, lon) WGS84 degrees
    beacon_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "gps": list(self.gps) if self.gps is not None else None,
            "beacon_id": self.beacon_id,
        }

    @classmethod
    def from_dict(cls, d: dict, field_path: str = "raw_location") -> "RawLocation":
        gps = d.get("gps")
        if gps is not None:
            gps = parse_gps(gps, f"{field_path}.gps")
        return cls(gps=gps, beacon_id=d.get("beacon_id"))

    @property
    def empty(self) -> bool:
        return self.gps is None and self.beacon_id is None


def parse_gps(value, field_path: str = "gps") -> tuple[float, float]:
    try:
        lat, lon = float(value[0]), float(value[1])
    except (TypeError, ValueError, IndexError, KeyError):
        raise ValidationError("expected [lat, lon]", field_path)
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise ValidationError("coordinates must be finite", field_path)
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"latitude {lat} out of range [-90, 90]", field_path)
    if not -180.0 <= lon <= 180.0:
        raise ValidationError(f"longitude {lon} out of range [-180, 180]", field_path)
    return (lat, lon)


@dataclass
class Message:
    id: str
    author_id: str
    recorded_at: datetime
    transcript: str
    raw_location: RawLocation = field(default_factory=RawLocation)
    zone_id: Optional[str] = None
    audio_ref: Optional[str] = None
    transcription_confidence: Optional[float] = None
    classification_units: list[ClassificationUnit] = field(default_factory=list)
    created_at: datetime = None  # server-assigned

    def __post_init__(self):
        self.recorded_at = as_utc_second(self.recorded_at)
        if self.created_at is None:
            self.created_at = self.recorded_at
        self.created_at = as_utc_second(self.created_at)

    def validate(self) -> "Message":
        if not str(self.id):
            raise ValidationError("id must be non-empty", "id")
        if not self.author_id:
            raise ValidationError("author_id must be non-empty", "author_id")
        if not self.transcript.strip():
            raise ValidationError("transcript must be non-empty", "transcript")
        if _FORBIDDEN_CONTROL_RE.search(self.transcript):
            raise ValidationError("transcript contains control characters", "transcript")
        if not self.classification_units:
            raise ValidationError("at least one classification unit required", "classification_units")
        if self.transcription_confidence is not None and not 0.0 <= self.transcription_confidence <= 1.0:
            raise ValidationError("confidence must be in [0, 1]", "transcription_confidence")
        if self.recorded_at > self.created_at:
            raise ValidationError("recorded_at is after created_at", "recorded_at")
        return self

    def subjects(self) -> set[Subject]:
        return {u.subject for u in self.classification_units}

    def max_importance_level(self) -> int | None:
        levels = [u.importance.level for u in self.classification_units if u.importance.level is not None]
        return max(levels) if levels else None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "author_id": self.author_id,
            "recorded_at": format_ts(self.recorded_at),
            "raw_location": self.raw_location.to_dict(),
            "zone_id": self.zone_id,
            "transcript": self.transcript,
            "audio_ref": self.audio_ref,
            "transcription_confidence": self.transcription_confidence,
            "classification_units": [u.to_dict() for u in self.classification_units],
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        units = d.get("classification_units") or []
        return cls(
            id=str(d["id"]),
            author_id=d["author_id"],
            recorded_at=parse_ts(d["recorded_at"], "recorded_at"),
            raw_location=RawLocation.from_dict(d.get("raw_location") or {}),
            zone_id=d.get("zone_id"),
            transcript=d["transcript"],
            audio_ref=d.get("audio_ref"),
            transcription_confidence=d.get("transcription_confidence"),
            classification_units=[
                ClassificationUnit.from_dict(u, f"classification_units[{i}]") for i, u in enumerate(units)
            ],
            created_at=parse_ts(d["created_at"], "created_at") if d.get("created_at") else None,
        )


@dataclass
class SensorStream:
    id: str
    kind: SensorKind
    zone_id: str
    description: str = ""

    def validate(self) -> "SensorStream":
        if not self.id:
            raise ValidationError("id must be non-empty", "id")
        if not self.zone_id:
            raise ValidationError("zone_id must be non-empty", "zone_id")
        return self

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "zone_id": self.zone_id,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorStream":
        return cls(
            id=str(d["id"]),
            kind=parse_enum(SensorKind, d.get("kind"), "kind"),
            zone_id=d["zone_id"],
            description=d.get("description", ""),
        )


@dataclass
class SensorReading:
    stream_id: str
    at: datetime
    value: float

    def __post_init__(self):
        self.at = as_utc_second(self.at)

    def validate(self) -> "SensorReading":
        if not self.stream_id:
            raise ValidationError("stream_id must be non-empty", "stream_id")
        if not isinstance(self.value, (int, float)) or not math.isfinite(self.value):
            raise ValidationError("value must be finite", "value")
        return self

    def to_dict(self) -> dict:
        return {"stream_id": self.stream_id, "at": format_ts(self.at), "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "SensorReading":
        return cls(stream_id=d["stream_id"], at=parse_ts(d["at"], "at"), value=float(d["value"]))


@dataclass
class Zone:
    id: str
    name: str
    geofence: Optional[list[tuple[float, float]]] = None  # [(lat, lon), ...], simple polygon
    beacon_ids: set[str] = field(default_factory=set)

    def validate(self) -> "Zone":
        # polygon simplicity is checked by geo.validate_geofence at store time
        if not self.id:
            raise ValidationError("id must be non-empty", "id")
        if self.geofence is not None:
            if len(self.geofence) < 3:
                raise ValidationError("geofence needs at least 3 vertices", "geofence")
            for i, vertex in enumerate(self.geofence):
                parse_gps(vertex, f"geofence[{i}]")
        return self

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "geofence": [list(v) for v in self.geofence] if self.geofence is not None else None,
            "beacon_ids": sorted(self.beacon_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Zone":
        fence = d.get("geofence")
        return cls(
            id=str(d["id"]),
            name=d.get("name", ""),
            geofence=[(float(v[0]), float(v[1])) for v in fence] if fence is not None else None,
            beacon_ids=set(d.get("beacon_ids") or []),
        )


@dataclass
class User:
    id: str
    display_name: str
    role: Role = Role.WORKER

    def validate(self) -> "User":
        if not self.id:
            raise ValidationError("id must be non-empty", "id")
        return self

    def to_dict(self) -> dict:
        return {"id": self.id, "display_name": self.display_name, "role": self.role.value}

    @classmethod
    def from_dict(cls, d: dict) -> "User":
        return cls(
            id=str(d["id"]),
            display_name=d.get("display_name", ""),
            role=parse_enum(Role, d.get("role", "Worker"), "role"),
        )


@dataclass
class SubscriptionRule:
    id: str
    user_id: str
    subject_filter: Optional[set[Subject]] = None
    zone_filter: Optional[set[str]] = None
    keyword_filter: Optional[set[str]] = None
    min_importance: Optional[Importance] = None

    def validate(self) -> "SubscriptionRule":
        if not self.id:
            raise ValidationError("id must be non-empty", "id")
        if not self.user_id:
            raise ValidationError("user_id must be non-empty", "user_id")
        filters = (self.subject_filter, self.zone_filter, self.keyword_filter, self.min_importance)
        if all(f is None for f in filters):
            raise ValidationError("at least one filter is required", "subject_filter")
        for name in ("subject_filter", "zone_filter", "keyword_filter"):
            value = getattr(self, name)
            if value is not None and len(value) == 0:
                raise ValidationError("empty-set filters are rejected", name)
        if self.min_importance is not None and self.min_importance.level is None:
            raise ValidationError("min_importance must be a level L1..L5", "min_importance")
        return self

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "user_id": self.user_id,
            "subject_filter": sorted(s.value for s in self.subject_filter) if self.subject_filter else None,
            "zone_filter": sorted(self.zone_filter) if self.zone_filter else None,
            "keyword_filter": sorted(self.keyword_filter) if self.keyword_filter else None,
            "min_importance": self.min_importance.value if self.min_importance else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubscriptionRule":
        subjects = d.get("subject_filter")
        return cls(
            id=str(d["id"]),
            user_id=d["user_id"],
            subject_filter={parse_enum(Subject, s, "subject_filter") for s in subjects} if subjects is not None else None,
            zone_filter=set(d["zone_filter"]) if d.get("zone_filter") is not None else None,
            keyword_filter={k.casefold() for k in d["keyword_filter"]} if d.get("keyword_filter") is not None else None,
            min_importance=parse_enum(Importance, d["min_importance"], "min_importance")
            if d.get("min_importance") is not None
            else None,
        )


@dataclass
class DeliveryRecord:
    message_id: str
    user_id: str
    state: DeliveryState = DeliveryState.PENDING
    attempts: int = 0
    last_attempt_at: Optional[datetime] = None

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "user_id": self.user_id,
            "state": self.state.value,
            "attempts": self.attempts,
            "last_attempt_at": format_ts(self.last_attempt_at) if self.last_attempt_at else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeliveryRecord":
        return cls(
            message_id=str(d["message_id"]),
            user_id=d["user_id"],
            state=parse_enum(DeliveryState, d.get("state", "Pending"), "state"),
            attempts=int(d.get("attempts", 0)),
            last_attempt_at=parse_ts(d["last_attempt_at"], "last_attempt_at") if d.get("last_attempt_at") else None,
        )


@dataclass
class AnomalyInterval:
    stream_id: str
    start: datetime
    end: datetime
    kind: AnomalyKind
    magnitude: float
    threshold_used: float

    def __post_init__(self):
        self.start = as_utc_second(self.start)
        self.end = as_utc_second(self.end)

    def validate(self) -> "AnomalyInterval":
        if not self.start < self.end:
            raise ValidationError("start must precede end", "start")
        if not math.isfinite(self.magnitude):
            raise ValidationError("magnitude must be finite", "magnitude")
        return self

    def to_dict(self) -> dict:
        return {
            "stream_id": self.stream_id,
            "start": format_ts(self.start),
            "end": format_ts(self.end),
            "kind": self.kind.value,
            "magnitude": self.magnitude,
            "threshold_used": self.threshold_used,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyInterval":
        return cls(
            stream_id=d["stream_id"],
            start=parse_ts(d["start"], "start"),
            end=parse_ts(d["end"], "end"),
            kind=parse_enum(AnomalyKind, d["kind"], "kind"),
            magnitude=float(d["magnitude"]),
            threshold_used=float(d["threshold_used"]),
        )


def clone_unit(unit: ClassificationUnit, **changes) -> ClassificationUnit:
    return replace(unit, **changes)

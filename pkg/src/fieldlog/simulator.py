"""Deterministic synthetic farm scenarios.

Generates sensor CSVs and message submissions with known ground truth so
detection and correlation can be tested end to end. Reproducibility
contract: same (seed, scenario) -> byte-identical output. The noise PRNG
is SplitMix64 (a fixed, documented 64-bit generator) feeding Box-Muller
for Gaussians, and every emitted value is printed with 6 significant
digits, so outputs are stable across platforms and can serve as golden
files.

Readings are a per-kind diurnal sinusoid (minimum at 00:00 UTC, maximum
at 12:00 UTC) plus seeded Gaussian noise, with events superimposed:
  - CO2Drawdown: linear ramp down by ``magnitude`` over ``duration_s``,
    then a slow linear recovery over ``recovery_s`` (default 6x duration)
  - FrostNight: raised-cosine dip over ``duration_s`` pulling the curve to
    ``-magnitude`` at the window centre
  - StepChange: permanent level shift of ``magnitude`` from ``time`` on
Each event emits one message per matching template at ``time + offset_s``,
located via the zone's beacon; ground truth pairs events with message ids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .errors import ValidationError
from .model import Role, SensorKind, SensorStream, User, Zone, parse_enum
from .store import Store
from .timeutil import format_ts, parse_ts

EVENT_TYPES = ("CO2Drawdown", "FrostNight", "StepChange")

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Steele/Lea/Flood SplitMix64; fixed algorithm, trivially portable."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def gauss(self) -> float:
        """Standard normal via Box-Muller (pair-cached)."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = self.random()
        while u1 == 0.0:
            u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)


def _fnv1a(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


@dataclass
class DiurnalModel:
    base: float
    amplitude: float
    noise_sd: float

    def value_at(self, at: datetime) -> float:
        day_frac = (at.hour * 3600 + at.minute * 60 + at.second) / 86400.0
        return self.base - self.amplitude * math.cos(2.0 * math.pi * day_frac)


@dataclass
class InjectedEvent:
    zone_id: str
    stream_kind: SensorKind
    event_type: str
    time: datetime
    magnitude: float
    duration_s: int
    recovery_s: int

    def window(self) -> tuple[datetime, datetime]:
        length = self.duration_s + (self.recovery_s if self.event_type == "CO2Drawdown" else 0)
        return self.time, self.time + timedelta(seconds=length)

    def offset_at(self, at: datetime, diurnal: DiurnalModel) -> float:
        dt = (at - self.time).total_seconds()
        if self.event_type == "StepChange":
            return self.magnitude if dt >= 0 else 0.0
        if dt < 0:
            return 0.0
        if self.event_type == "CO2Drawdown":
            if dt <= self.duration_s:
                return -self.magnitude * dt / self.duration_s
            rec = dt - self.duration_s
            if rec <= self.recovery_s:
                return -self.magnitude * (1.0 - rec / self.recovery_s)
            return 0.0
        # FrostNight: dip deep enough to reach -magnitude at the window centre
        if dt > self.duration_s:
            return 0.0
        centre = self.time + timedelta(seconds=self.duration_s / 2)
        depth = diurnal.value_at(centre) + self.magnitude
        if depth <= 0:
            return 0.0
        return -depth * 0.5 * (1.0 - math.cos(2.0 * math.pi * dt / self.duration_s))


@dataclass
class MessageTemplate:
    template: str
    author_id: str
    offset_s: int
    event_type: str | None = None  # None matches every event


@dataclass
class ScenarioZone:
    zone: Zone
    beacon_id: str
    streams: list[SensorStream]


@dataclass
class Scenario:
    seed: int
    span_start: datetime
    span_end: datetime
    sample_interval_s: int
    users: list[User]
    zones: list[ScenarioZone]
    diurnal: dict[SensorKind, DiurnalModel]
    events: list[InjectedEvent]
    templates: list[MessageTemplate]

    def validate(self) -> "Scenario":
        if self.span_start >= self.span_end:
            raise ValidationError("span start must precede end", "span")
        if self.sample_interval_s <= 0:
            raise ValidationError("sample_interval_s must be positive", "sample_interval_s")
        zone_ids = {z.zone.id for z in self.zones}
        user_ids = {u.id for u in self.users}
        for i, ev in enumerate(self.events):
            if ev.zone_id not in zone_ids:
                raise ValidationError(f"unknown zone {ev.zone_id!r}", f"events[{i}].zone")
            if not self.span_start <= ev.time < self.span_end:
                raise ValidationError("event time outside span", f"events[{i}].time")
            if ev.event_type not in EVENT_TYPES:
                raise ValidationError(f"unknown event type {ev.event_type!r}", f"events[{i}].type")
            if ev.duration_s <= 0:
                raise ValidationError("duration_s must be positive", f"events[{i}].duration_s")
            zone = next(z for z in self.zones if z.zone.id == ev.zone_id)
            if all(s.kind is not ev.stream_kind for s in zone.streams):
                raise ValidationError(
                    f"zone {ev.zone_id!r} has no {ev.stream_kind.value} stream", f"events[{i}].stream_kind"
                )
        for i, tpl in enumerate(self.templates):
            if tpl.author_id not in user_ids:
                raise ValidationError(f"unknown author {tpl.author_id!r}", f"message_templates[{i}].author")
            if tpl.event_type is not None and tpl.event_type not in EVENT_TYPES:
                raise ValidationError(
                    f"unknown event type {tpl.event_type!r}", f"message_templates[{i}].event_type"
                )
        for kind in {s.kind for z in self.zones for s in z.streams}:
            if kind not in self.diurnal:
                raise ValidationError(f"no diurnal model for {kind.value}", "diurnal")
        return self


def parse_scenario(text: str, origin: str = "<scenario>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{origin}:{exc.lineno}: invalid JSON: {exc.msg}", "scenario")
    try:
        users = [
            User(id=u["id"], display_name=u.get("display_name", u["id"]),
                 role=parse_enum(Role, u.get("role", "Worker"), "users.role"))
            for u in doc.get("users", [])
        ]
        zones = []
        for z in doc["zones"]:
            fence = z.get("geofence")
            zone = Zone(
                id=z["id"],
                name=z.get("name", z["id"]),
                geofence=[(float(v[0]), float(v[1])) for v in fence] if fence else None,
                beacon_ids={z["beacon_id"]},
            )
            streams = [
                SensorStream(
                    id=s["id"],
                    kind=parse_enum(SensorKind, s["kind"], "streams.kind"),
                    zone_id=z["id"],
                    description=s.get("description", ""),
                )
                for s in z.get("streams", [])
            ]
            zones.append(ScenarioZone(zone=zone, beacon_id=z["beacon_id"], streams=streams))
        diurnal = {
            parse_enum(SensorKind, kind, "diurnal"): DiurnalModel(
                base=float(m["base"]), amplitude=float(m["amplitude"]), noise_sd=float(m["noise_sd"])
            )
            for kind, m in doc.get("diurnal", {}).items()
        }
        events = [
            InjectedEvent(
                zone_id=e["zone"],
                stream_kind=parse_enum(SensorKind, e["stream_kind"], "events.stream_kind"),
                event_type=e["type"],
                time=parse_ts(e["time"], "events.time"),
                magnitude=float(e["magnitude"]),
                duration_s=int(e["duration_s"]),
                recovery_s=int(e.get("recovery_s", 6 * int(e["duration_s"]))),
            )
            for e in doc.get("events", [])
        ]
        templates = [
            MessageTemplate(
                template=t["template"],
                author_id=t["author"],
                offset_s=int(t.get("offset_s", 0)),
                event_type=t.get("event_type"),
            )
            for t in doc.get("message_templates", [])
        ]
        scenario = Scenario(
            seed=int(doc["seed"]),
            span_start=parse_ts(doc["span"]["start"], "span.start"),
            span_end=parse_ts(doc["span"]["end"], "span.end"),
            sample_interval_s=int(doc.get("sample_interval_s", 300)),
            users=users,
            zones=zones,
            diurnal=diurnal,
            events=events,
            templates=templates,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{origin}: malformed scenario: {exc!r}", "scenario")
    return scenario.validate()


def load_scenario(path) -> Scenario:
    from pathlib import Path

    p = Path(path)
    return parse_scenario(p.read_text(encoding="utf-8"), str(p))


@dataclass
class SimulationOutput:
    readings_csv: str
    submissions_jsonl: str
    ground_truth: list[dict] = field(default_factory=list)


def _fmt(value: float) -> str:
    text = f"{value:.6g}"
    if "e" in text or "E" in text:  # outside any sane sensor range; keep grammar valid
        text = f"{value:.6f}"
    return text


def generate(scenario: Scenario) -> SimulationOutput:
    scenario.validate()
    csv_lines = ["stream_id,timestamp,value"]
    for szone in scenario.zones:
        events_here = [e for e in scenario.events if e.zone_id == szone.zone.id]
        for stream in szone.streams:
            model = scenario.diurnal[stream.kind]
            rng = SplitMix64(scenario.seed ^ _fnv1a(stream.id))
            stream_events = [e for e in events_here if e.stream_kind is stream.kind]
            at = scenario.span_start
            while at < scenario.span_end:
                value = model.value_at(at)
                for event in stream_events:
                    value += event.offset_at(at, model)
                value += rng.gauss() * model.noise_sd
                csv_lines.append(f"{stream.id},{format_ts(at)},{_fmt(value)}")
                at += timedelta(seconds=scenario.sample_interval_s)
    csv_lines.append("")

    jsonl_lines = []
    ground_truth = []
    seq = 0
    for index, event in enumerate(scenario.events):
        szone = next(z for z in scenario.zones if z.zone.id == event.zone_id)
        stream = next(s for s in szone.streams if s.kind is event.stream_kind)
        start, end = event.window()
        message_ids = []
        for tpl in scenario.templates:
            if tpl.event_type is not None and tpl.event_type != event.event_type:
                continue
            seq += 1
            message_id = f"sim-{seq:04d}"
            transcript = tpl.template.format(
                zone=szone.zone.id,
                zone_name=szone.zone.name,
                kind=event.stream_kind.value,
                magnitude=_fmt(event.magnitude),
            )
            jsonl_lines.append(
                json.dumps(
                    {
                        "id": message_id,
                        "author_id": tpl.author_id,
                        "recorded_at": format_ts(event.time + timedelta(seconds=tpl.offset_s)),
                        "beacon_id": szone.beacon_id,
                        "transcript": transcript,
                    },
                    ensure_ascii=False,
                )
            )
            message_ids.append(message_id)
        ground_truth.append(
            {
                "event_index": index,
                "zone_id": event.zone_id,
                "stream_id": stream.id,
                "event_type": event.event_type,
                "start": format_ts(start),
                "end": format_ts(end),
                "magnitude": event.magnitude,
                "message_ids": message_ids,
            }
        )
    jsonl_lines.append("")
    return SimulationOutput(
        readings_csv="\n".join(csv_lines),
        submissions_jsonl="\n".join(jsonl_lines),
        ground_truth=ground_truth,
    )


def install_entities(store: Store, scenario: Scenario) -> None:
    """Create the scenario's users, zones and streams in a store."""
    for user in scenario.users:
        store.put_user(user)
    for szone in scenario.zones:
        store.put_zone(szone.zone)
        for stream in szone.streams:
            store.put_stream(stream)

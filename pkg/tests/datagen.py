"""Randomized (seeded) test data: messages with mixed labels/zones/times."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from fieldlog.model import (
    ClassificationUnit,
    Importance,
    LabelSource,
    Message,
    Subject,
    TypeCode,
    User,
    Zone,
)
from fieldlog.simulator import SplitMix64

WORDS = [
    "mildew", "leaves", "fan", "pump", "order", "wind", "beacon", "harvest",
    "frozen", "co2", "ventilation", "rows", "weak", "price", "rain", "trap",
]

T0 = datetime(2017, 6, 1, 0, 0, 0, tzinfo=timezone.utc)


def pick(rng: SplitMix64, items):
    return items[rng.next_u64() % len(items)]


def random_messages(rng: SplitMix64, n: int, zones: list[str], users: list[str]) -> list[Message]:
    subjects = list(Subject)
    importances = list(Importance)
    types = list(TypeCode)
    out = []
    for i in range(n):
        words = [pick(rng, WORDS) for _ in range(3 + rng.next_u64() % 6)]
        n_units = 1 + (rng.next_u64() % 10 == 0)
        units = [
            ClassificationUnit(
                subject=pick(rng, subjects),
                importance=pick(rng, importances),
                type_code=pick(rng, types),
                source=LabelSource.MANUAL,
            )
            for _ in range(n_units)
        ]
        out.append(
            Message(
                id=f"r{i:05d}",
                author_id=pick(rng, users),
                recorded_at=T0 + timedelta(minutes=int(rng.next_u64() % (90 * 24 * 60))),
                zone_id=pick(rng, zones + [None]),
                transcript=" ".join(words),
                classification_units=units,
            )
        )
    return out


def install_random_corpus(store, seed: int, n: int):
    rng = SplitMix64(seed)
    zones = ["za", "zb", "zc"]
    users = ["ua", "ub", "uc"]
    for z in zones:
        store.put_zone(Zone(id=z, name=z.upper(), beacon_ids={f"bcn-{z}"}))
    for u in users:
        store.put_user(User(id=u, display_name=u))
    messages = random_messages(rng, n, zones, users)
    for m in messages:
        store.append_message(m, [])
    return messages

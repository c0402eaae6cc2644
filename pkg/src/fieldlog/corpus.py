"""Bundled synthetic annotated corpus: 200 manually-labeled messages from a
fictional two-term greenhouse trial (Jun-Jul and Sep-Nov 2017).

The label distributions are pinned:
  - subjects 67/60/24/8/23/18 over 200 messages
  - importance L1..L5 26/10/89/41/12 plus 24 unclassified = 202 counts,
    via two messages each split into two units differing in importance
  - type codes 75/5/7/27/6/7/4/24 plus 50 unclassified = 205 counts,
    via five messages each split into two units differing in type code
  - exactly 18 messages mention a pest term from the default lexicon

``build_corpus`` constructs the exact same corpus the packaged
``data/corpus.jsonl`` was generated from (a test keeps them identical);
``install_corpus`` loads the bundled file into a store.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from importlib import resources
from pathlib import Path

from .model import (
    ClassificationUnit,
    Importance,
    LabelSource,
    Message,
    RawLocation,
    Role,
    Subject,
    TypeCode,
    User,
    Zone,
)
from .simulator import SplitMix64
from .store import Store

CORPUS_SEED = 20170601

CORPUS_USERS = [
    User(id="u-owner", display_name="Farm owner", role=Role.OWNER),
    User(id="u-staff", display_name="Field staff", role=Role.WORKER),
    User(id="u-advisor", display_name="Crop advisor", role=Role.ADVISOR),
]

CORPUS_ZONES = [Zone(id=f"house{n}", name=f"House #{n}", beacon_ids={f"bcn-house{n}"}) for n in range(1, 11)]

# trial terms (inclusive date ranges)
_TERMS = [(date(2017, 6, 1), date(2017, 7, 31)), (date(2017, 9, 1), date(2017, 11, 30))]

_PEST_TRANSCRIPTS = [
    "Powdery mildew can be seen in the young leaves at the bottom. I will remove these leaves at the next harvest.",
    "Found aphids on the underside of the pepper leaves in row 3, south side.",
    "Leaf spot is spreading on the lower tomato leaves near the door of row 5.",
    "Armyworms chewed through two seedlings overnight, set out traps along row 1.",
    "A few whitefly adults around the yellow sticky trap by the entrance again.",
    "Spider mites on the pepper stems in row 7, undersides look dusty.",
    "Mildew traces on the top shelf seedlings, moved them apart for airflow.",
    "Counted five aphids per leaf on the middle row, worse than last week.",
    "Leaf spots on the outer tomato rows, cut away the worst leaves.",
    "One armyworm found near the irrigation line, checked the whole bed.",
    "Whitefly cloud when shaking the row 2 plants, need the vacuum trap.",
    "Early mildew ring on a single leaf in row 8, flagged it with tape.",
    "Aphid colonies along the new shoots, rinsed them off by hand.",
    "Small leaf spot patches after the humid days, watching row 4 closely.",
    "Spider mite webbing between two leaves in the corner bed.",
    "Thrips marks on the young pepper fruit near the fan wall.",
    "Mildew smell near the dense foliage, thinned the canopy a little.",
    "Armyworm droppings under the bench, swept and baited the area.",
]

_FARM_TRANSCRIPTS = [
    "The first peppers of row {row} are turning color, harvest looks early.",
    "Roots on the grafted tomatoes look strong, watering can stay as is.",
    "Fruit set on the south bed is heavy, will thin the clusters tomorrow.",
    "Lower leaves yellowing slightly in row {row}, likely normal aging.",
    "New seedlings hardened off well, planting them out after lunch.",
    "Sugar content of the sample tomatoes measured 6 today.",
    "Pruned the side shoots in row {row}, growth is vigorous this week.",
    "Some flowers dropped near the door, maybe the draft is too strong.",
    "Stems are thicker than last season, spacing seems to pay off.",
    "Tied up the tall plants in row {row} before they lean over.",
    "Harvested 14 crates from the east rows this morning.",
    "Skin cracking on a few tomatoes after the heavy watering day.",
]

_EQUIPMENT_TRANSCRIPTS = [
    "The circulation fan in house {house} is rattling, bearing may be worn.",
    "Drip line in row {row} is clogged again, flushed it with clean water.",
    "Heater pilot went out overnight, relit it and watched for ten minutes.",
    "Replaced the cracked valve on the north manifold.",
    "The vent motor sticks halfway, greased the rail for now.",
    "Pump pressure reads low on the gauge, will check the filter.",
    "Shade screen cable frayed near the winch in house {house}.",
    "Boiler made a knocking sound during the morning cycle.",
    "Sprayer nozzle mists unevenly, soaked it in descaler.",
    "Door roller fell off the track in house {house}, pushed it back on.",
    "The side window crank is stiff, needs oil before it seizes.",
    "Water filter cartridge looked brown, swapped in a spare.",
]

_SALES_TRANSCRIPTS = [
    "The Wednesday market order doubled, reserve two extra crates.",
    "Buyer asked for smaller packs of peppers for the shelf trial.",
    "Price for A-grade tomatoes moved up 20 yen at the co-op.",
    "Shipment leaves at 7 tomorrow, pallets must be wrapped tonight.",
    "New customer wants a weekly standing order from next month.",
    "Invoice for last week's delivery still unpaid, call them Friday.",
    "Label stock is low, order more before the holiday rush.",
    "The restaurant praised the last batch, send them first picks.",
]

_ENVIRONMENT_TRANSCRIPTS = [
    "Strong north wind since noon, closed the windward vents early.",
    "Heavy rain forecast for tonight, checked the gutters and drains.",
    "Cloudy all day, growth will slow if this continues.",
    "First cold morning of the season, grass was white outside.",
    "Typhoon track shifted east, still tying down the outer film.",
    "Short hail shower at 1500, no visible damage to the roofs.",
    "Humid and still air today, left the doors open longer.",
    "Clear sky and strong sunlight, shading cloth went on at ten.",
]

_SYSTEM_TRANSCRIPTS = [
    "The recognition result dropped half of this sentence, retrying.",
    "App restarted by itself while recording near house {house}.",
    "Headset battery died mid-message, switching to the spare.",
    "Beacon by the door of house {house} seems weak, phone missed it.",
    "Upload stuck on the farm wifi edge, sent again from the office.",
    "Microphone crackles in the wind, trying the foam cover.",
    "The app put this message in the wrong place yesterday.",
    "Voice level too low indoors, speaking closer to the mic now.",
]

_OTHERS_TRANSCRIPTS = [
    "Visitor group arrives at 10, keep the main path clear.",
    "Left the spare keys in the office drawer, second from the top.",
    "Lunch break moved to 1230 because of the delivery.",
    "New part-timer starts Thursday, prepare gloves and boots.",
    "Borrowed the neighbor's trailer, return it before the weekend.",
    "Reminder to book the truck inspection for next month.",
    "The radio in the packing shed needs new batteries.",
    "Took photos of the whole north bed for the records.",
]


@dataclass
class _Spec:
    subject: Subject
    transcript: str
    units: list[tuple[Importance, TypeCode]]
    pest: bool = False


def _take(pool: list, value) -> None:
    pool.remove(value)


def _shuffled(pool: list, rng: SplitMix64) -> list:
    items = list(pool)
    for i in range(len(items) - 1, 0, -1):
        j = rng.next_u64() % (i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def _expand(counts: dict) -> list:
    out = []
    for value, n in counts.items():
        out.extend([value] * n)
    return out


def build_corpus() -> list[Message]:
    rng = SplitMix64(CORPUS_SEED)

    # single-label pools (importance / type) before the hand-placed messages
    imp_pool = _expand({Importance.L1: 25, Importance.L2: 10, Importance.L3: 87, Importance.L4: 40, Importance.L5: 12})
    type_pool = _expand(
        {
            TypeCode.A0: 72,
            TypeCode.A1: 5,
            TypeCode.A2: 6,
            TypeCode.B0: 25,
            TypeCode.B1: 6,
            TypeCode.B2: 6,
            TypeCode.C1: 4,
            TypeCode.C2: 21,
        }
    )
    for imp in (Importance.L3, Importance.L3, Importance.L3, Importance.L4, Importance.L4,
                Importance.L5, Importance.L5, Importance.L5):
        _take(imp_pool, imp)  # five type-splits, then the three L5 showcase messages
    for tc in (TypeCode.A2, TypeCode.C2, TypeCode.A2, TypeCode.C2, TypeCode.B2):
        _take(type_pool, tc)  # two importance-splits and the three showcase messages
    imp_pool = _shuffled(imp_pool, rng)
    type_pool = _shuffled(type_pool, rng)

    def ordinary(subject: Subject, transcript: str, pest: bool = False) -> _Spec:
        return _Spec(subject, transcript, [(imp_pool.pop(), type_pool.pop())], pest=pest)

    def type_unclassified(subject: Subject, transcript: str) -> _Spec:
        return _Spec(subject, transcript, [(imp_pool.pop(), TypeCode.UNCLASSIFIED)])

    specs: list[_Spec] = []

    # FarmProducts (67): 18 pest mentions, 3 showcase L5 messages, the two
    # importance-splits, two of the five type-splits, 43 ordinary
    specs.append(
        _Spec(Subject.FARM_PRODUCTS, _PEST_TRANSCRIPTS[0], [(Importance.L5, TypeCode.A2)], pest=True)
    )
    for text in _PEST_TRANSCRIPTS[1:]:
        specs.append(ordinary(Subject.FARM_PRODUCTS, text, pest=True))
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Careful treatment is required this season since the green peppers tear from the root too easily. "
            "If it happens the product value drops to zero, so please be careful.",
            [(Importance.L5, TypeCode.C2)],
        )
    )
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Root growth on the south side of row 8 is weak, promoting it with liquid feed is necessary. "
            "The whole south side looks behind, so water or feed is the question.",
            [(Importance.L5, TypeCode.B2)],
        )
    )
    # importance splits: units differ only in importance
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Color on the west bed is uneven but acceptable. The seedlings by the door must be re-potted this week.",
            [(Importance.L3, TypeCode.A2), (Importance.L4, TypeCode.A2)],
        )
    )
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Thinking about narrower spacing for the next planting. Also the old labels can go out with the trash.",
            [(Importance.L3, TypeCode.C2), (Importance.L1, TypeCode.C2)],
        )
    )
    # type splits: units differ only in type code
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Picked the first row clean before the rain. Whether topping the tall plants now pays off needs thought.",
            [(Importance.L3, TypeCode.A0), (Importance.L3, TypeCode.C2)],
        )
    )
    specs.append(
        _Spec(
            Subject.FARM_PRODUCTS,
            "Trimmed the runners and the bed looks airy now; the strong shoots could be kept longer next time.",
            [(Importance.L4, TypeCode.A2), (Importance.L4, TypeCode.B2)],
        )
    )
    for i in range(43):
        specs.append(ordinary(Subject.FARM_PRODUCTS, _FARM_TRANSCRIPTS[i % len(_FARM_TRANSCRIPTS)].format(row=i % 9 + 1)))

    # Equipment (60): three type-splits, 5 type-unclassified, 52 ordinary
    specs.append(
        _Spec(
            Subject.EQUIPMENT,
            "Swapped the worn fan belt in the afternoon. Whether the motor itself is failing is difficult to decide.",
            [(Importance.L3, TypeCode.A0), (Importance.L3, TypeCode.C2)],
        )
    )
    specs.append(
        _Spec(
            Subject.EQUIPMENT,
            "Flushed the drip lines end to end. The burner settings may need a rethink before winter.",
            [(Importance.L3, TypeCode.B0), (Importance.L3, TypeCode.C2)],
        )
    )
    specs.append(
        _Spec(
            Subject.EQUIPMENT,
            "Greased the vent rails and noted the readings in the log book afterwards.",
            [(Importance.L4, TypeCode.B0), (Importance.L4, TypeCode.A0)],
        )
    )
    for i in range(5):
        specs.append(
            type_unclassified(Subject.EQUIPMENT, _EQUIPMENT_TRANSCRIPTS[(i + 7) % len(_EQUIPMENT_TRANSCRIPTS)].format(house=i % 10 + 1, row=i % 9 + 1))
        )
    for i in range(52):
        specs.append(
            ordinary(Subject.EQUIPMENT, _EQUIPMENT_TRANSCRIPTS[i % len(_EQUIPMENT_TRANSCRIPTS)].format(house=i % 10 + 1, row=i % 9 + 1))
        )

    # SalesMarketing (24): 10 type-unclassified, 14 ordinary
    for i in range(10):
        specs.append(type_unclassified(Subject.SALES_MARKETING, _SALES_TRANSCRIPTS[i % len(_SALES_TRANSCRIPTS)]))
    for i in range(14):
        specs.append(ordinary(Subject.SALES_MARKETING, _SALES_TRANSCRIPTS[(i + 3) % len(_SALES_TRANSCRIPTS)]))

    # Environment (8): 3 type-unclassified, 5 ordinary
    for i in range(3):
        specs.append(type_unclassified(Subject.ENVIRONMENT, _ENVIRONMENT_TRANSCRIPTS[i]))
    for i in range(5):
        specs.append(ordinary(Subject.ENVIRONMENT, _ENVIRONMENT_TRANSCRIPTS[i + 3]))

    # System (23): tool-trouble notes stay unclassified on both label axes
    for i in range(23):
        specs.append(
            _Spec(
                Subject.SYSTEM,
                _SYSTEM_TRANSCRIPTS[i % len(_SYSTEM_TRANSCRIPTS)].format(house=i % 10 + 1),
                [(Importance.UNCLASSIFIED, TypeCode.UNCLASSIFIED)],
            )
        )

    # Others (18): 1 fully unclassified, 8 type-unclassified, 9 ordinary
    specs.append(
        _Spec(Subject.OTHERS, _OTHERS_TRANSCRIPTS[0], [(Importance.UNCLASSIFIED, TypeCode.UNCLASSIFIED)])
    )
    for i in range(8):
        specs.append(type_unclassified(Subject.OTHERS, _OTHERS_TRANSCRIPTS[(i + 1) % len(_OTHERS_TRANSCRIPTS)]))
    for i in range(9):
        specs.append(ordinary(Subject.OTHERS, _OTHERS_TRANSCRIPTS[(i + 2) % len(_OTHERS_TRANSCRIPTS)]))

    assert len(specs) == 200 and not imp_pool and not type_pool

    # chronological layout over the two trial terms, subjects interleaved
    trial_days: list[date] = []
    for start, end in _TERMS:
        day = start
        while day <= end:
            trial_days.append(day)
            day += timedelta(days=1)
    order = _shuffled(list(range(200)), rng)

    messages = []
    for position, spec_index in enumerate(order):
        spec = specs[spec_index]
        day = trial_days[position * len(trial_days) // 200]
        recorded = datetime(day.year, day.month, day.day, tzinfo=timezone.utc) + timedelta(
            minutes=390 + (position * 47) % 640
        )
        zone = CORPUS_ZONES[position % len(CORPUS_ZONES)]
        messages.append(
            Message(
                id=f"vm-{position + 1:03d}",
                author_id="u-owner",
                recorded_at=recorded,
                raw_location=RawLocation(beacon_id=sorted(zone.beacon_ids)[0]),
                zone_id=zone.id,
                transcript=spec.transcript,
                classification_units=[
                    ClassificationUnit(subject=spec.subject, importance=imp, type_code=tc, source=LabelSource.MANUAL)
                    for imp, tc in spec.units
                ],
                created_at=recorded,
            ).validate()
        )
    return messages


def corpus_jsonl(messages: list[Message] | None = None) -> str:
    messages = messages if messages is not None else build_corpus()
    return "".join(json.dumps(m.to_dict(), ensure_ascii=False) + "\n" for m in messages)


def load_bundled_corpus() -> list[Message]:
    text = resources.files("fieldlog").joinpath("data/corpus.jsonl").read_text(encoding="utf-8")
    return [Message.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def install_corpus(store: Store, messages: list[Message] | None = None) -> int:
    """Create the corpus users/zones and append every message; returns count."""
    if messages is None:
        messages = load_bundled_corpus()
    for user in CORPUS_USERS:
        store.put_user(user)
    for zone in CORPUS_ZONES:
        store.put_zone(zone)
    for message in messages:
        store.append_message(message, [])
    return len(messages)


def write_corpus_file(path: str | Path) -> None:
    Path(path).write_text(corpus_jsonl(), encoding="utf-8")

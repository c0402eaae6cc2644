"""Rule-based first-pass labels plus manual annotation.

The rules are deliberately simple keyword machinery: the taxonomy is the
contract, not classifier accuracy, and manual labels (source=Manual) are
authoritative — re-running rules never touches a Manual unit.
"""

from __future__ import annotations

from .errors import ValidationError
from .lexicon import Lexicon
from .model import (
    ClassificationUnit,
    Importance,
    LabelSource,
    Message,
    Subject,
    TypeCode,
    parse_enum,
)
from .store import Store
from .textutil import count_hits, has_quantitative_token, term_match, tokenize


def classify_subject(transcript: str, lexicon: Lexicon) -> Subject:
    """Most keyword hits wins; ties resolved by lexicon priority; no hits -> Others."""
    if not transcript.strip():
        raise ValidationError("transcript must be non-empty", "transcript")
    tokens = tokenize(transcript)
    hits = {s: count_hits(transcript, tokens, lexicon.subject_keywords.get(s, [])) for s in Subject}
    best = max(hits.values())
    if best == 0:
        return Subject.OTHERS
    for subject in lexicon.priority:
        if hits[subject] == best:
            return subject
    return Subject.OTHERS  # unreachable: priority covers all subjects


def classify_type_code(transcript: str, lexicon: Lexicon) -> TypeCode:
    """Letter: C when a consideration marker is present, else B on an action
    verb, else A. Digit: 1 on a quantitative token, else 2 on a qualitative
    descriptor, else 0. C0 does not exist in the taxonomy and coerces to C2."""
    if not transcript.strip():
        raise ValidationError("transcript must be non-empty", "transcript")
    tokens = tokenize(transcript)
    if any(term_match(transcript, m, tokens) for m in lexicon.considerations):
        letter = "C"
    elif any(term_match(transcript, v, tokens) for v in lexicon.actions):
        letter = "B"
    else:
        letter = "A"
    if has_quantitative_token(tokens):
        digit = "1"
    elif any(term_match(transcript, q, tokens) for q in lexicon.qualitative):
        digit = "2"
    else:
        digit = "0"
    if letter == "C" and digit == "0":
        digit = "2"
    return TypeCode(letter + digit)


def rule_unit(transcript: str, lexicon: Lexicon) -> ClassificationUnit:
    """The single first-pass unit attached to a freshly ingested message.
    Rules cannot judge importance; that label stays Unclassified until a
    human annotates."""
    return ClassificationUnit(
        subject=classify_subject(transcript, lexicon),
        importance=Importance.UNCLASSIFIED,
        type_code=classify_type_code(transcript, lexicon),
        source=LabelSource.RULE,
    )


def detect_pest_keywords(transcript: str, lexicon: Lexicon) -> set[str]:
    """Pest terms from the lexicon found in the transcript (case-folded)."""
    if not transcript.strip():
        raise ValidationError("transcript must be non-empty", "transcript")
    tokens = tokenize(transcript)
    return {term for term in lexicon.pests if term_match(transcript, term, tokens)}


def _apply_labels(unit: ClassificationUnit, labels: dict, field_path: str) -> ClassificationUnit:
    allowed = {"subject", "importance", "type_code"}
    unknown = set(labels) - allowed
    if unknown:
        raise ValidationError(f"unknown label fields {sorted(unknown)}", field_path)
    return ClassificationUnit(
        subject=parse_enum(Subject, labels["subject"], f"{field_path}.subject")
        if "subject" in labels
        else unit.subject,
        importance=parse_enum(Importance, labels["importance"], f"{field_path}.importance")
        if "importance" in labels
        else unit.importance,
        type_code=parse_enum(TypeCode, labels["type_code"], f"{field_path}.type_code")
        if "type_code" in labels
        else unit.type_code,
        source=LabelSource.MANUAL,
    )


def annotate(
    store: Store,
    message_id: str,
    unit_index: int,
    labels: dict | None = None,
    split: list[dict] | None = None,
) -> Message:
    """Manually label one classification unit, or split it into k >= 2 units.

    Splitting replaces the indexed unit with one unit per supplied label set
    (unspecified fields inherit from the original); the transcript is never
    touched. Manual labels take source=Manual and dominate any rule re-run.
    """
    message = store.get_message(message_id)
    units = list(message.classification_units)
    if not 0 <= unit_index < len(units):
        raise ValidationError(
            f"unit_index {unit_index} out of range for {len(units)} unit(s)", "unit_index"
        )
    if (labels is None) == (split is None):
        raise ValidationError("provide exactly one of labels or split", "labels")
    if split is not None:
        if len(split) < 2:
            raise ValidationError("split requires at least 2 label sets", "split")
        replacement = [_apply_labels(units[unit_index], part, f"split[{i}]") for i, part in enumerate(split)]
        units[unit_index : unit_index + 1] = replacement
    else:
        units[unit_index] = _apply_labels(units[unit_index], labels, "labels")
    return store.replace_units(message_id, units)


def reclassify_message(store: Store, lexicon: Lexicon, message_id: str) -> Message:
    """Re-run the rules over a stored message. Only Rule-sourced units are
    recomputed; Manual units are left untouched."""
    message = store.get_message(message_id)
    units = [
        rule_unit(message.transcript, lexicon) if unit.source is LabelSource.RULE else unit
        for unit in message.classification_units
    ]
    return store.replace_units(message_id, units)

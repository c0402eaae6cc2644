"""Subscription matching and delivery state.

A rule matches when every present filter matches (AND); the recipient set
is the union over rules (OR), minus the author. Delivery is at-least-once:
records stay visible in the inbox until acknowledged, and the
(message_id, user_id) key makes record creation exactly-once under replay.
"""

from __future__ import annotations

from datetime import datetime

from .errors import NotFoundError
from .model import DeliveryRecord, DeliveryState, Message, SubscriptionRule
from .store import Store
from .textutil import token_match, tokenize


def rule_matches(rule: SubscriptionRule, msg: Message, tokens: list[str] | None = None) -> bool:
    if tokens is None:
        tokens = tokenize(msg.transcript)
    if rule.subject_filter is not None and not (rule.subject_filter & msg.subjects()):
        return False
    if rule.zone_filter is not None and msg.zone_id not in rule.zone_filter:
        return False
    if rule.keyword_filter is not None and not any(token_match(tokens, kw) for kw in rule.keyword_filter):
        return False
    if rule.min_importance is not None:
        level = msg.max_importance_level()
        if level is None or level < rule.min_importance.level:
            return False
    return True


def match_subscribers(msg: Message, rules: list[SubscriptionRule]) -> set[str]:
    """User ids whose rules match; the author never receives their own message."""
    tokens = tokenize(msg.transcript)
    matched = {rule.user_id for rule in rules if rule_matches(rule, msg, tokens)}
    matched.discard(msg.author_id)
    return matched


def pending_records(msg: Message, rules: list[SubscriptionRule]) -> list[DeliveryRecord]:
    """The Pending records to append atomically with the message."""
    return [
        DeliveryRecord(message_id=msg.id, user_id=uid, state=DeliveryState.PENDING)
        for uid in sorted(match_subscribers(msg, rules))
    ]


def distribute(store: Store, msg: Message) -> list[DeliveryRecord]:
    """(Re)create delivery records for an already-persisted message.

    Safe to replay after a crash: existing records are left alone, so at
    most one record exists per (message, user)."""
    rules = store.list_subscriptions()
    store.add_deliveries_if_missing(msg.id, sorted(match_subscribers(msg, rules)))
    return store.list_deliveries(message_id=msg.id)


def fetch_inbox(
    store: Store, user_id: str, since: datetime | None = None
) -> list[tuple[Message, DeliveryRecord]]:
    """Pending and Delivered items for a user, ordered by recorded_at (ties by
    message id). Returned records transition to Delivered; items repeat on
    subsequent fetches until acknowledged."""
    if not store.has_user(user_id):
        raise NotFoundError(f"no user {user_id!r}")
    records = [
        r for r in store.list_deliveries(user_id=user_id) if r.state is not DeliveryState.ACKNOWLEDGED
    ]
    items = []
    for record in records:
        msg = store.get_message(record.message_id)
        if since is not None and msg.recorded_at < since:
            continue
        items.append((msg, store.mark_delivered(record.message_id, user_id)))
    items.sort(key=lambda pair: (pair[0].recorded_at, pair[0].id))
    return items


def acknowledge(store: Store, user_id: str, message_id: str) -> DeliveryRecord:
    """Mark a delivery Acknowledged; repeat calls are no-op successes."""
    return store.acknowledge(message_id, user_id)

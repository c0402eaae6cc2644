"""Independent reference implementations used only by tests.

These deliberately do not call into fieldlog internals: the winding-number
containment test, the all-pairs anomaly scan and the brute-force message
filter re-derive their answers from first principles so they can serve as
oracles for the production code paths.
"""

from __future__ import annotations

import math
import re


def winding_number_contains(point, polygon) -> bool:
    """Nonzero-winding containment via summed signed angles."""
    x, y = point
    total = 0.0
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i][0] - x, polygon[i][1] - y
        bx, by = polygon[(i + 1) % n][0] - x, polygon[(i + 1) % n][1] - y
        cross = ax * by - ay * bx
        dot = ax * bx + ay * by
        total += math.atan2(cross, dot)
    return abs(total) > math.pi  # ~2*pi inside, ~0 outside


def on_any_edge(point, polygon, eps=1e-9) -> bool:
    x, y = point
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
        if abs(cross) > eps:
            continue
        if min(ax, bx) - eps <= x <= max(ax, bx) + eps and min(ay, by) - eps <= y <= max(ay, by) + eps:
            return True
    return False


def brute_force_sharp_change_spans(samples, threshold, window_s):
    """All-pairs scan: returns the merged [start, end] spans (epoch seconds)."""
    raw = []
    n = len(samples)
    for i in range(n):
        for j in range(i + 1, n):
            dt = samples[j][0] - samples[i][0]
            if dt > window_s:
                break
            if abs(samples[j][1] - samples[i][1]) >= threshold:
                raw.append((samples[i][0], samples[j][0]))
    raw.sort()
    merged = []
    for s, e in raw:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


_WORD_RE = re.compile(r"\d+\.\d+[\w°%²]*|[\w°%²]+")


def brute_filter_messages(messages, user=None, time_from=None, time_to=None, zone=None,
                          keyword=None, subject=None, min_level=None):
    """Straight re-statement of the filter predicates over Message objects."""
    out = []
    for m in messages:
        if user is not None and m.author_id != user:
            continue
        if time_from is not None and m.recorded_at < time_from:
            continue
        if time_to is not None and m.recorded_at >= time_to:
            continue
        if zone is not None and m.zone_id != zone:
            continue
        if keyword is not None:
            words = _WORD_RE.findall(m.transcript.casefold())
            if not any(keyword.casefold() in w for w in words):
                continue
        if subject is not None and subject not in {u.subject.value for u in m.classification_units}:
            continue
        if min_level is not None:
            levels = [
                int(u.importance.value[1])
                for u in m.classification_units
                if u.importance.value.startswith("L")
            ]
            if not levels or max(levels) < min_level:
                continue
        out.append(m)
    out.sort(key=lambda m: (m.recorded_at, m.id))
    return out

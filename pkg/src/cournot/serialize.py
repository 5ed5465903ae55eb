"""JSON-friendly encodings for rationals and events."""

from __future__ import annotations

from fractions import Fraction

from .measure import Interval01, LeveledEvent, SampleSpace, as_fraction


def rational_str(x) -> str | float | None:
    """'num/den' for rationals, plain float otherwise."""
    if x is None:
        return None
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    return float(x)


def interval_to_json(iv: Interval01) -> dict:
    return {
        "lo": rational_str(iv.lo),
        "hi": rational_str(iv.hi),
        "lo_closed": iv.lo_closed,
        "hi_closed": iv.hi_closed,
    }


def interval_from_json(obj) -> Interval01:
    if isinstance(obj, str):
        return parse_interval(obj)
    return Interval01(
        as_fraction(obj["lo"]),
        as_fraction(obj["hi"]),
        bool(obj.get("lo_closed", True)),
        bool(obj.get("hi_closed", True)),
    )


def parse_interval(text: str) -> Interval01:
    """Parse interval notation such as '[1/2, 1]' or '[0, 7/10)'."""
    text = text.strip()
    if len(text) < 5 or text[0] not in "[(" or text[-1] not in "])":
        raise ValueError(f"bad interval {text!r}")
    lo, hi = (part.strip() for part in text[1:-1].split(","))
    return Interval01(as_fraction(lo), as_fraction(hi), text[0] == "[", text[-1] == "]")


def event_to_json(event) -> dict:
    if isinstance(event, LeveledEvent):
        return {"level": event.level, "tuples": [list(t) for t in event.labels()]}
    # frequency events stay symbolic
    return {
        "freq": {
            "base": event_to_json(event.base),
            "interval": interval_to_json(event.interval),
            "reps": event.reps,
        },
        "level": event.level,
    }


def event_from_json(space: SampleSpace, obj):
    """Accept {"level": n, "tuples": [...]}, a bare list of label tuples,
    or {"level": n, "full": true} / {"level": n, "empty": true}."""
    if isinstance(obj, list):
        return LeveledEvent.from_labels(space, obj)
    if not isinstance(obj, dict):
        raise ValueError(f"cannot read an event from {obj!r}")
    if "freq" in obj:
        from .freq import FreqEventSpec

        f = obj["freq"]
        return FreqEventSpec(
            event_from_json(space, f["base"]), interval_from_json(f["interval"]), int(f["reps"])
        )
    level = int(obj["level"])
    if obj.get("full"):
        return space.full(level)
    if obj.get("empty"):
        return space.empty(level)
    return LeveledEvent.from_labels(space, obj.get("tuples", []), level=level)

"""Finite sample spaces, leveled events, exact probability measures.

Everything here is exact: weights are :class:`fractions.Fraction` and the
extended probability of a level-n event is the sum over its tuples of the
product of one-step weights.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import (
    EmptyList,
    LevelMismatch,
    NegativeWeight,
    SpaceMismatch,
    SumNotOne,
    ThresholdOutOfRange,
)

Rational = Union[Fraction, int, str, float]

MAX_SPACE_SIZE = 16


def as_fraction(x: Rational) -> Fraction:
    """Coerce ``x`` to a Fraction.

    Strings are parsed exactly ("3/5", "0.02"); floats go through their
    shortest decimal repr so ``0.9`` becomes ``9/10`` rather than the binary
    neighbour.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class SampleSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("sample space needs at least one outcome")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate outcome labels in {labels}")
        if len(labels) > MAX_SPACE_SIZE:
            raise ValueError(f"|Omega| = {len(labels)} exceeds {MAX_SPACE_SIZE}")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown outcome {label!r}") from None

    def outcomes(self, level: int):
        """All n-tuples of outcome indices in lexicographic order."""
        return itertools.product(range(self.size), repeat=level)

    def cardinality(self, level: int) -> int:
        return self.size**level

    def full(self, level: int) -> "LeveledEvent":
        return LeveledEvent(self, level, frozenset(self.outcomes(level)))

    def empty(self, level: int) -> "LeveledEvent":
        return LeveledEvent(self, level, frozenset())

    def event(self, *label_tuples: Sequence[str], level: int | None = None) -> "LeveledEvent":
        """Build an event from label tuples, e.g. ``coin.event("HT", "TH")``."""
        return LeveledEvent.from_labels(self, label_tuples, level=level)

    def as_indices(self, outcome: Sequence) -> tuple[int, ...]:
        """Outcome tuple with labels replaced by their indices; indices pass through."""
        return tuple(self.index(x) if isinstance(x, str) else int(x) for x in outcome)

    def tuple_index(self, outcome: Sequence[int]) -> int:
        """Position of ``outcome`` in the lexicographic order of Omega^n."""
        idx = 0
        for i in outcome:
            idx = idx * self.size + i
        return idx


@dataclass(frozen=True)
class LeveledEvent:
    """A subset of Omega^level, stored as a frozenset of index tuples."""

    space: SampleSpace
    level: int
    tuples: frozenset

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be a positive integer")
        tuples = frozenset(tuple(t) for t in self.tuples)
        for t in tuples:
            if len(t) != self.level:
                raise LevelMismatch(f"tuple {t} has length {len(t)}, expected {self.level}")
            if any(not (0 <= i < self.space.size) for i in t):
                raise ValueError(f"tuple {t} has an outcome index outside the space")
        object.__setattr__(self, "tuples", tuples)

    @classmethod
    def from_labels(cls, space, label_tuples, level=None) -> "LeveledEvent":
        tuples = set()
        for lt in label_tuples:
            if isinstance(lt, str):
                # "HT" is shorthand for ("H", "T") when it is not itself a label
                lt = (lt,) if lt in space.labels else tuple(lt)
            tuples.add(tuple(space.index(label) for label in lt))
        if level is None:
            lengths = {len(t) for t in tuples}
            if len(lengths) != 1:
                raise ValueError("cannot infer level; pass level= explicitly")
            level = lengths.pop()
        return cls(space, level, frozenset(tuples))

    @classmethod
    def from_mask(cls, space, level, mask: int) -> "LeveledEvent":
        """Event whose i-th tuple (lexicographic order) is present iff bit i of mask is set."""
        tuples = frozenset(t for i, t in enumerate(space.outcomes(level)) if mask >> i & 1)
        return cls(space, level, tuples)

    def to_mask(self) -> int:
        mask = 0
        for t in self.tuples:
            mask |= 1 << self.space.tuple_index(t)
        return mask

    def indices(self) -> list[int]:
        return sorted(self.space.tuple_index(t) for t in self.tuples)

    def labels(self) -> list[tuple[str, ...]]:
        return sorted(tuple(self.space.labels[i] for i in t) for t in self.tuples)

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, outcome) -> bool:
        return self.space.as_indices(outcome) in self.tuples

    def __iter__(self):
        return iter(sorted(self.tuples))

    def is_full(self) -> bool:
        return len(self.tuples) == self.space.cardinality(self.level)

    def is_empty(self) -> bool:
        return not self.tuples

    def _check(self, other: "LeveledEvent"):
        if not isinstance(other, LeveledEvent):
            raise TypeError(f"expected a LeveledEvent, got {type(other).__name__}")
        if other.space != self.space:
            raise SpaceMismatch("events live on different sample spaces")
        if other.level != self.level:
            raise LevelMismatch(f"level {self.level} vs level {other.level}")

    def complement(self) -> "LeveledEvent":
        return LeveledEvent(
            self.space, self.level, frozenset(self.space.outcomes(self.level)) - self.tuples
        )

    def __invert__(self):
        return self.complement()

    def __or__(self, other):
        self._check(other)
        return LeveledEvent(self.space, self.level, self.tuples | other.tuples)

    def __and__(self, other):
        self._check(other)
        return LeveledEvent(self.space, self.level, self.tuples & other.tuples)

    def __sub__(self, other):
        self._check(other)
        return LeveledEvent(self.space, self.level, self.tuples - other.tuples)

    def issubset(self, other) -> bool:
        self._check(other)
        return self.tuples <= other.tuples

    __le__ = issubset

    def isdisjoint(self, other) -> bool:
        self._check(other)
        return self.tuples.isdisjoint(other.tuples)

    def __repr__(self):
        body = ", ".join("".join(t) if all(len(x) == 1 for x in t) else "(" + ",".join(t) + ")"
                         for t in self.labels())
        return f"LeveledEvent(level={self.level}, {{{body}}})"


@dataclass(frozen=True)
class ProbabilityMeasure:
    space: SampleSpace
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(as_fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != self.space.size:
            raise ValueError(f"expected {self.space.size} weights, got {len(weights)}")
        for label, w in zip(self.space.labels, weights):
            if w < 0:
                raise NegativeWeight(f"weight of {label!r} is {w}")
        total = sum(weights, Fraction(0))
        if total != 1:
            raise SumNotOne(f"weights sum to {total}, not 1")

    def weight(self, label: str) -> Fraction:
        return self.weights[self.space.index(label)]

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(self.space.labels, self.weights))


def make_measure(space: SampleSpace, weights: Iterable[Rational]) -> ProbabilityMeasure:
    """Exact measure from per-outcome weights; no silent renormalisation."""
    return ProbabilityMeasure(space, tuple(as_fraction(w) for w in weights))


def _tuple_prob(weights, t) -> Fraction:
    prob = Fraction(1)
    for i in t:
        prob *= weights[i]
    return prob


def extended_prob(P: ProbabilityMeasure, A) -> Fraction | float:
    """P-bar(A): the n-fold product measure of A, for A at level n.

    Frequency events (and anything else exposing ``probability(P)``) are
    evaluated through their own closed form instead of enumeration.
    """
    if A.space != P.space:
        raise SpaceMismatch("measure and event live on different sample spaces")
    if not isinstance(A, LeveledEvent):
        return A.probability(P)
    if A.is_full():
        return Fraction(1)
    return sum((_tuple_prob(P.weights, t) for t in A.tuples), Fraction(0))


def rectangle(events: Sequence[LeveledEvent]) -> LeveledEvent:
    """Cartesian product A_1 x ... x A_n of level-1 events."""
    if not events:
        raise EmptyList("rectangle needs at least one factor")
    space = events[0].space
    for ev in events:
        if ev.space != space:
            raise SpaceMismatch("rectangle factors live on different sample spaces")
        if ev.level != 1:
            raise LevelMismatch("rectangle factors must be level-1 events")
    factors = [sorted(t[0] for t in ev.tuples) for ev in events]
    return LeveledEvent(space, len(events), frozenset(itertools.product(*factors)))


@dataclass(frozen=True)
class Interval01:
    """Sub-interval of [0, 1] with explicit endpoint closure."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo, hi = as_fraction(self.lo), as_fraction(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (0 <= lo <= hi <= 1):
            raise ValueError(f"need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")

    @classmethod
    def closed(cls, lo, hi) -> "Interval01":
        return cls(lo, hi, True, True)

    @classmethod
    def upper(cls, sigma) -> "Interval01":
        """[sigma, 1]"""
        return cls(sigma, 1, True, True)

    @classmethod
    def lower(cls, sigma) -> "Interval01":
        """[0, sigma)"""
        return cls(0, sigma, True, False)

    def is_empty(self) -> bool:
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def __contains__(self, x) -> bool:
        x = as_fraction(x)
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def count_range(self, k: int) -> tuple[int, int]:
        """Inclusive range (jmin, jmax) of counts j in 0..k with j/k inside.

        Returns jmin > jmax when no count qualifies.
        """
        lo, hi = self.lo * k, self.hi * k
        jmin = math.ceil(lo) if self.lo_closed else math.floor(lo) + 1
        jmax = math.floor(hi) if self.hi_closed else math.ceil(hi) - 1
        return max(jmin, 0), min(jmax, k)

    def isdisjoint(self, other: "Interval01") -> bool:
        if self.is_empty() or other.is_empty():
            return True
        first, second = sorted([self, other], key=lambda iv: (iv.lo, not iv.lo_closed))
        if first.hi < second.lo:
            return True
        if first.hi > second.lo:
            return False
        return not (first.hi_closed and second.lo_closed)

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class Threshold:
    """Typicality threshold delta with 1/2 < delta < 1."""

    delta: Fraction

    def __post_init__(self):
        delta = as_fraction(self.delta)
        object.__setattr__(self, "delta", delta)
        if not (Fraction(1, 2) < delta < 1):
            raise ThresholdOutOfRange(f"threshold {delta} outside (1/2, 1)")

    def is_near_one(self, epsilon) -> bool:
        """True when 1 - epsilon <= delta, i.e. delta counts as close to 1."""
        return 1 - as_fraction(epsilon) <= self.delta


def as_threshold(delta) -> Threshold:
    return delta if isinstance(delta, Threshold) else Threshold(as_fraction(delta))


def typicality_contains(P: ProbabilityMeasure, delta, A) -> bool:
    """Membership of A in T(P, delta) = {A : P-bar(A) >= delta}."""
    delta = as_threshold(delta).delta
    prob = extended_prob(P, A)
    if isinstance(prob, float):
        return prob >= float(delta)
    return prob >= delta

"""C-classes: per-level event families that contain the full space, are
closed upwards and never hold two disjoint events.

A class is a membership oracle. Built-ins know how to answer for both
explicit :class:`~cournot.measure.LeveledEvent` objects and symbolic
frequency events; custom classes receive whatever event is queried.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .errors import SpaceMismatch
from .measure import (
    LeveledEvent,
    ProbabilityMeasure,
    SampleSpace,
    as_threshold,
    typicality_contains,
)
from .serialize import event_to_json, rational_str

ENUMERATION_CUTOFF = 12


class CClass:
    kind = "custom"
    support_note = "all levels"

    def __init__(self, space: SampleSpace):
        self.space = space

    def _member(self, event) -> bool:
        raise NotImplementedError

    def contains(self, event) -> bool:
        if event.space != self.space:
            raise SpaceMismatch("event and class live on different sample spaces")
        return bool(self._member(event))

    __contains__ = contains

    def describe(self) -> dict:
        return {"kind": self.kind, "support_note": self.support_note}


class TrivialClass(CClass):
    kind = "trivial"

    def _member(self, event):
        return event.is_full()


class TypicalityClass(CClass):
    kind = "typicality"
    support_note = "all levels; frequency events evaluated in closed form"

    def __init__(self, P: ProbabilityMeasure, delta):
        super().__init__(P.space)
        self.measure = P
        self.threshold = as_threshold(delta)

    @property
    def delta(self):
        return self.threshold.delta

    def _member(self, event):
        return typicality_contains(self.measure, self.threshold, event)

    def describe(self):
        return {
            **super().describe(),
            "measure": [rational_str(w) for w in self.measure.weights],
            "delta": rational_str(self.delta),
        }


class UnionClass(CClass):
    kind = "union-lift"

    def __init__(self, first: CClass, second: CClass):
        if first.space != second.space:
            raise SpaceMismatch("cannot lift classes over different sample spaces")
        super().__init__(first.space)
        self.parts = (first, second)
        self.support_note = " & ".join(p.support_note for p in self.parts)

    def _member(self, event):
        return any(p.contains(event) for p in self.parts)

    def describe(self):
        return {**super().describe(), "parts": [p.describe() for p in self.parts]}


class CustomClass(CClass):
    kind = "custom"

    def __init__(self, space, membership: Callable[[object], bool], note: str = "caller-defined"):
        super().__init__(space)
        self.membership = membership
        self.support_note = note

    def _member(self, event):
        return self.membership(event)


def trivial_cclass(space: SampleSpace) -> TrivialClass:
    """{Omega, Omega^2, Omega^3, ...}"""
    return TrivialClass(space)


def typicality_cclass(P: ProbabilityMeasure, delta) -> TypicalityClass:
    return TypicalityClass(P, delta)


def union_lift(C1: CClass, C2: CClass) -> UnionClass:
    """Membership is C1 OR C2. The result need not be a C-class."""
    return UnionClass(C1, C2)


def custom_cclass(space, membership, note="caller-defined") -> CustomClass:
    return CustomClass(space, membership, note)


def blackbox(C: CClass) -> CustomClass:
    """Hide the kind of C so that only its membership oracle is visible."""
    return CustomClass(C.space, C.contains, note=f"black box over {C.kind}")


@dataclass
class AxiomResult:
    passed: bool
    counterexample: tuple | None = None

    def to_dict(self):
        return {
            "passed": self.passed,
            "counterexample": None if self.counterexample is None
            else [event_to_json(e) for e in self.counterexample],
        }


@dataclass
class AxiomReport:
    level: int
    axiom_a: AxiomResult
    axiom_b: AxiomResult
    axiom_c: AxiomResult
    budget_used: int
    method: str
    budget_exhausted: bool = False

    @property
    def passed(self) -> bool:
        return self.axiom_a.passed and self.axiom_b.passed and self.axiom_c.passed

    def to_dict(self):
        return {
            "level": self.level,
            "axiom_a": self.axiom_a.to_dict(),
            "axiom_b": self.axiom_b.to_dict(),
            "axiom_c": self.axiom_c.to_dict(),
            "budget_used": self.budget_used,
            "method": self.method,
            "budget_exhausted": self.budget_exhausted,
            "passed": self.passed,
        }


def _submasks(mask):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def check_axioms(C: CClass, level: int, budget: int = 100_000, seed: int = 0) -> AxiomReport:
    """Check the three C-class axioms at one level.

    Exhaustive over all subsets of Omega^level when it has at most
    ``ENUMERATION_CUTOFF`` elements; otherwise random events are drawn until
    ``budget`` membership calls have been spent.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    space = C.space
    m = space.cardinality(level)
    full = (1 << m) - 1
    calls = 0
    cache: dict[int, bool] = {}

    def member(mask):
        nonlocal calls
        if mask not in cache:
            calls += 1
            cache[mask] = C.contains(LeveledEvent.from_mask(space, level, mask))
        return cache[mask]

    def ev(mask):
        return LeveledEvent.from_mask(space, level, mask)

    a = AxiomResult(True) if member(full) else AxiomResult(False, (space.full(level),))

    if m <= ENUMERATION_CUTOFF:
        exhausted = (1 << m) > budget
        masks = range(min(1 << m, budget))
        members = [x for x in masks if member(x)]
        memberset = set(members)
        b = AxiomResult(True)
        for x in members:
            bit = next((1 << i for i in range(m) if not x >> i & 1 and (x | 1 << i) in cache
                        and not cache[x | 1 << i]), None)
            if bit is not None:
                b = AxiomResult(False, (ev(x), ev(x | bit)))
                break
        c = AxiomResult(True)
        for x in members:
            comp = full ^ x
            if len(memberset) < 1 << bin(comp).count("1"):
                partner = next((y for y in members if y & x == 0 and y != x), None)
            else:
                partner = next((y for y in _submasks(comp) if y in memberset and y != x), None)
            if partner is not None:
                c = AxiomResult(False, (ev(x), ev(partner)))
                break
        return AxiomReport(level, a, b, c, calls, "enumeration", exhausted)

    rng = random.Random(seed)
    b = AxiomResult(True)
    c = AxiomResult(True)

    def random_mask(within):
        density = rng.random()
        bits = [i for i in range(m) if within >> i & 1 and rng.random() < density]
        return sum(1 << i for i in bits)

    while calls < budget and (b.passed or c.passed):
        x = random_mask(full)
        if not member(x):
            continue
        if b.passed:
            y = x | random_mask(full ^ x)
            if not member(y):
                b = AxiomResult(False, (ev(x), ev(y)))
        if c.passed:
            for y in (full ^ x, random_mask(full ^ x)):
                if y != x and member(y):
                    c = AxiomResult(False, (ev(x), ev(y)))
                    break
        if len(cache) >= 1 << m:
            break
    return AxiomReport(level, a, b, c, calls, "sampling", calls >= budget)


@dataclass
class ClosureReport:
    infimum: object
    checked: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "infimum": rational_str(self.infimum),
            "checked": self.checked,
            "violations": [
                {"event": event_to_json(e), "value": rational_str(v)} for e, v in self.violations
            ],
            "passed": self.passed,
        }


def certainty_closure_check(C: CClass, M, samples, tol: float = 0.0) -> ClosureReport:
    """Report sampled events A with M(A) >= inf{M(B) : B in C} that are not in C.

    ``M`` maps an event to a number or to an estimate exposing ``.value``.
    The infimum runs over the sampled members only.
    """
    def value(A):
        v = M(A)
        return getattr(v, "value", v)

    scored = [(A, value(A), C.contains(A)) for A in samples]
    member_values = [v for _, v, inside in scored if inside]
    if not member_values:
        return ClosureReport(None, len(scored))
    inf = min(member_values)
    violations = [(A, v) for A, v, inside in scored if not inside and v >= inf - tol]
    return ClosureReport(inf, len(scored), violations)

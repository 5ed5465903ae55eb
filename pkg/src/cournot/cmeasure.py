"""C-measures: M_C(A) = sup{sigma : S(A,[sigma,1],k) is eventually in C}.

Closed forms exist for typicality classes (the extended probability), for
the trivial class (indicator of the full space) and for unions of those (the
pointwise maximum). Every other class is measured by bisection on sigma with
a finite-horizon membership predicate.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .cclass import CClass, TrivialClass, TypicalityClass, UnionClass
from .errors import ContainmentViolated, NonMonotonePredicate, OracleFailure, SpaceMismatch
from .freq import FreqEventSpec, definitively_in_oracle
from .measure import (
    Interval01,
    LeveledEvent,
    ProbabilityMeasure,
    SampleSpace,
    as_threshold,
    extended_prob,
    rectangle,
)
from .serialize import event_to_json, rational_str

DEFAULT_TOL = 1e-6
DEFAULT_HORIZON = 512
PROBE_SCOPE_NOTE = (
    "equality checked on the listed probe events only; "
    "it is evidence at this probe set, not a statement about every event"
)


@dataclass(frozen=True)
class CMeasureEstimate:
    value: Fraction | float
    method: str  # "closed-form" | "bisection"
    tolerance: float | None = None
    horizon: int | None = None
    bracket: tuple | None = None

    def __post_init__(self):
        if self.method == "bisection":
            lo, hi = self.bracket
            if hi - lo > self.tolerance:
                raise ValueError("bisection bracket wider than its tolerance")

    def to_dict(self):
        return {
            "value": rational_str(self.value),
            "method": self.method,
            "tolerance": self.tolerance,
            "horizon": self.horizon,
            "bracket": None if self.bracket is None else [rational_str(b) for b in self.bracket],
        }


def c_measure_typicality(P: ProbabilityMeasure, A) -> CMeasureEstimate:
    """The C-measure of T(P, delta) is P-bar for every delta in (1/2, 1)."""
    if A.space != P.space:
        raise SpaceMismatch("measure and event live on different sample spaces")
    return CMeasureEstimate(extended_prob(P, A), "closed-form")


def _closed_form(C: CClass, A):
    if isinstance(C, TypicalityClass):
        return extended_prob(C.measure, A)
    if isinstance(C, TrivialClass):
        return Fraction(int(A.is_full()))
    if isinstance(C, UnionClass):
        # valid because membership of S(A,[sigma,1],k) stabilises for both kinds
        values = [_closed_form(part, A) for part in C.parts]
        if None not in values:
            return max(values)
    return None


def c_measure(
    C: CClass,
    A,
    tol: float = DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
    window: int = 3,
    closed_form: bool = True,
) -> CMeasureEstimate:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    if A.space != C.space:
        raise SpaceMismatch("event and class live on different sample spaces")
    if closed_form:
        value = _closed_form(C, A)
        if value is not None:
            return CMeasureEstimate(value, "closed-form")

    def pred(sigma):
        return definitively_in_oracle(C, A, Interval01.upper(sigma), horizon, window).holds

    if not pred(Fraction(0)):
        raise OracleFailure("S(A,[0,1],k) is the full space yet the class rejects it")
    if pred(Fraction(1)):
        return CMeasureEstimate(Fraction(1), "bisection", tol, horizon, (Fraction(1), Fraction(1)))
    lo, hi = Fraction(0), Fraction(1)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if pred(mid):
            lo = mid
        else:
            hi = mid
    if lo > 0 and not pred(lo / 2):
        raise NonMonotonePredicate(f"membership holds at sigma={lo} but not at {lo / 2}")
    if hi < 1 and pred((hi + 1) / 2):
        raise NonMonotonePredicate(f"membership fails at sigma={hi} but holds at {(hi + 1) / 2}")
    return CMeasureEstimate(float((lo + hi) / 2), "bisection", tol, horizon, (lo, hi))


def default_probe_events(
    space: SampleSpace,
    levels=(1, 2),
    n_random: int = 20,
    random_levels=(1, 2, 3),
    seed: int = 0,
) -> list[LeveledEvent]:
    """Singletons and rectangles at ``levels`` plus seeded random events."""
    out: dict = {}

    def add(ev):
        out.setdefault((ev.level, ev.tuples), ev)

    level1 = [
        LeveledEvent(space, 1, frozenset((i,) for i in combo))
        for r in range(1, space.size + 1)
        for combo in itertools.combinations(range(space.size), r)
    ]
    for n in levels:
        for t in space.outcomes(n):
            add(LeveledEvent(space, n, frozenset([t])))
        if n > 1:
            for factors in itertools.product(level1, repeat=n):
                add(rectangle(list(factors)))
    rng = random.Random(seed)
    for _ in range(n_random):
        n = rng.choice(list(random_levels))
        tuples = [t for t in space.outcomes(n) if rng.random() < 0.5]
        add(LeveledEvent(space, n, frozenset(tuples)))
    return list(out.values())


@dataclass
class EquivalenceReport:
    equivalent: bool
    tol: float
    horizon: int
    rows: list = field(default_factory=list)
    witness: object = None
    scope: str = PROBE_SCOPE_NOTE

    def to_dict(self):
        return {
            "equivalent": self.equivalent,
            "tol": self.tol,
            "horizon": self.horizon,
            "scope": {"note": self.scope, "probe_count": len(self.rows)},
            "witness": None if self.witness is None else event_to_json(self.witness),
            "rows": [
                {
                    "event": event_to_json(ev),
                    "m1": m1.to_dict(),
                    "m2": m2.to_dict(),
                    "difference": float(abs(m1.value - m2.value)),
                }
                for ev, m1, m2 in self.rows
            ],
        }


def equivalent(C1: CClass, C2: CClass, probe_events, tol=DEFAULT_TOL, horizon=DEFAULT_HORIZON):
    if C1.space != C2.space:
        raise SpaceMismatch("cannot compare classes over different sample spaces")
    probe_events = list(probe_events)
    if not probe_events:
        raise ValueError("need at least one probe event")
    rows = []
    witness = None
    for ev in probe_events:
        m1 = c_measure(C1, ev, tol, horizon)
        m2 = c_measure(C2, ev, tol, horizon)
        rows.append((ev, m1, m2))
        if witness is None and abs(m1.value - m2.value) > tol:
            witness = ev
    return EquivalenceReport(witness is None, tol, horizon, rows, witness)


def _witness_ks(cap):
    yield from range(1, 257)
    k = 256.0
    while k < cap:
        k *= 1.25
        yield int(k)


def find_disjoint_pair(C: CClass, A, sigma, k_cap: int = 10**6):
    """Smallest probed k with both S(A,[0,sigma),k) and S(A,[sigma,1],k) in C."""
    low, high = Interval01.lower(sigma), Interval01.upper(sigma)
    for k in _witness_ks(k_cap):
        below, above = FreqEventSpec(A, low, k), FreqEventSpec(A, high, k)
        if C.contains(below) and C.contains(above):
            return k, below, above
    return None


@dataclass
class ContainmentReport:
    status: str  # "equivalent" | "contradiction" | "inconclusive"
    delta: Fraction
    tol: float
    horizon: int
    containment_checked: int
    rows: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        """Both admissible outcomes: equal measures, or a class that
        breaks the disjointness axiom."""
        return self.status in ("equivalent", "contradiction")

    def to_dict(self):
        return {
            "status": self.status,
            "consistent": self.consistent,
            "delta": rational_str(self.delta),
            "tol": self.tol,
            "horizon": self.horizon,
            "scope": {"note": PROBE_SCOPE_NOTE, "probe_count": len(self.rows),
                      "containment_checked": self.containment_checked},
            "rows": [
                {"event": event_to_json(ev), "pbar": rational_str(pbar),
                 "measure": est.to_dict(), "outcome": outcome}
                for ev, pbar, est, outcome in self.rows
            ],
            "witnesses": self.witnesses,
        }


def _containment_samples(P, delta, probe_events):
    samples = [ev for ev in probe_events if extended_prob(P, ev) >= delta]
    space = P.space
    for n in (1, 2):
        m = space.cardinality(n)
        if m > 12:
            break
        for mask in range(1 << m):
            ev = LeveledEvent.from_mask(space, n, mask)
            if extended_prob(P, ev) >= delta:
                samples.append(ev)
    return samples


def verify_theorem1(
    P: ProbabilityMeasure,
    delta,
    C: CClass,
    probe_events,
    tol: float = DEFAULT_TOL,
    horizon: int = DEFAULT_HORIZON,
) -> ContainmentReport:
    """Numerically test T(P, delta) in C  =>  M_C == P-bar on the probes.

    When a probe has M_C(A) > P-bar(A) the disproof mechanism is exhibited:
    a sigma strictly between the two and a k at which both disjoint events
    S(A,[0,sigma),k) and S(A,[sigma,1],k) belong to C.
    """
    delta = as_threshold(delta).delta
    probe_events = list(probe_events)
    samples = _containment_samples(P, delta, probe_events)
    for ev in samples:
        if not C.contains(ev):
            raise ContainmentViolated(f"{ev!r} is typical for P at {delta} but not in the class")
    rows, witnesses = [], []
    status = "equivalent"
    for ev in probe_events:
        pbar = extended_prob(P, ev)
        est = c_measure(C, ev, tol, horizon)
        if abs(est.value - pbar) <= tol:
            rows.append((ev, pbar, est, "match"))
            continue
        outcome = "mismatch"
        if est.value > pbar:
            top = est.bracket[0] if est.bracket else est.value
            top = Fraction(top) if not isinstance(top, Fraction) else top
            if top > pbar:
                sigma = (Fraction(pbar) + top) / 2
                found = find_disjoint_pair(C, ev, sigma)
                if found:
                    k, below, above = found
                    witnesses.append({
                        "event": event_to_json(ev),
                        "sigma": rational_str(sigma),
                        "k": k,
                        "pair": [event_to_json(below), event_to_json(above)],
                    })
                    outcome = "contradiction"
                    status = "contradiction"
        if outcome == "mismatch" and status == "equivalent":
            status = "inconclusive"
        rows.append((ev, pbar, est, outcome))
    return ContainmentReport(status, delta, tol, horizon, len(samples), rows, witnesses)

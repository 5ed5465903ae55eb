"""Does a probability measure govern an experiment?

``governs`` pairs the fixed empirical decision rule (one instance of the
practically-certain class) with a grid of typicality thresholds (instances
of the typical class) and asks whether some threshold yields a typical
class inside the practically-certain one at every tested level.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from .cmeasure import default_probe_events
from .errors import BudgetExceeded, MeasuresEqual, SpaceMismatch
from .experiment import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    DEFAULT_N,
    ExperimentModel,
    _verdict,
    empirically_equivalent,
    guardband,
    run_trials,
)
from .freq import EXACT_MAX_K, FreqEventSpec, freq_event_prob
from .measure import (
    Interval01,
    LeveledEvent,
    ProbabilityMeasure,
    as_fraction,
    as_threshold,
)
from .serialize import event_to_json, rational_str

DEFAULT_EVENT_BUDGET = 2000
WITNESS_K_CAP = 10**6


def events_by_probability(P: ProbabilityMeasure, level: int, min_prob, budget: int):
    """Yield (P-bar(A), A) at ``level`` in non-increasing P-bar order while
    P-bar(A) >= min_prob, at most ``budget`` events.

    Works on complements: subsets of Omega^level are generated in
    non-decreasing total mass with the usual heap walk over sorted weights.
    """
    space = P.space
    outcomes = list(space.outcomes(level))
    weights = []
    for t in outcomes:
        w = Fraction(1)
        for i in t:
            w *= P.weights[i]
        weights.append(w)
    order = sorted(range(len(outcomes)), key=lambda i: (weights[i], i))
    w = [weights[i] for i in order]
    slack = 1 - as_fraction(min_prob)
    full = frozenset(outcomes)

    def event(removed):
        return LeveledEvent(space, level, full - {outcomes[order[i]] for i in removed})

    emitted = 0
    if budget <= 0:
        return
    yield Fraction(1), event(())
    emitted += 1
    heap = [(w[0], 0, (0,))] if w else []
    while heap and emitted < budget:
        mass, last, removed = heapq.heappop(heap)
        if mass > slack:
            return
        yield 1 - mass, event(removed)
        emitted += 1
        if last + 1 < len(w):
            heapq.heappush(heap, (mass + w[last + 1], last + 1, removed + (last + 1,)))
            heapq.heappush(heap, (mass - w[last] + w[last + 1], last + 1,
                                  removed[:-1] + (last + 1,)))


@dataclass(frozen=True)
class Violation:
    delta: Fraction
    event: LeveledEvent
    typicality: Fraction
    verdict: str
    observed_frequency: float

    def to_dict(self):
        return {
            "delta": rational_str(self.delta),
            "level": self.event.level,
            "event": event_to_json(self.event),
            "typicality": rational_str(self.typicality),
            "verdict": self.verdict,
            "observed_frequency": self.observed_frequency,
        }


@dataclass
class GovernanceReport:
    measure_id: str
    experiment_id: str
    threshold_grid: list
    levels_tested: list
    events_tested: dict
    violations: list
    inconclusive: dict
    predicted_inconclusive: dict
    passing_thresholds: list
    scope: dict

    @property
    def verdict(self) -> str:
        return "governs-at-scope" if self.passing_thresholds else "violated"

    @property
    def governs(self) -> bool:
        return bool(self.passing_thresholds)

    def violations_at(self, delta=None, level=None) -> list:
        return [
            v for v in self.violations
            if (delta is None or v.delta == as_fraction(delta))
            and (level is None or v.event.level == level)
        ]

    def inconclusive_fraction(self, delta) -> float:
        delta = as_fraction(delta)
        tested = sum(self.events_tested[delta].values())
        return self.inconclusive[delta] / tested if tested else 0.0

    def predicted_inconclusive_fraction(self, delta) -> float:
        delta = as_fraction(delta)
        tested = sum(self.events_tested[delta].values())
        return self.predicted_inconclusive[delta] / tested if tested else 0.0

    def to_dict(self):
        return {
            "measure_id": self.measure_id,
            "experiment_id": self.experiment_id,
            "verdict": self.verdict,
            "threshold_grid": [rational_str(d) for d in self.threshold_grid],
            "passing_thresholds": [rational_str(d) for d in self.passing_thresholds],
            "levels_tested": self.levels_tested,
            "events_tested": {
                rational_str(d): {str(n): c for n, c in per.items()}
                for d, per in self.events_tested.items()
            },
            "inconclusive": {rational_str(d): c for d, c in self.inconclusive.items()},
            "predicted_inconclusive": {
                rational_str(d): c for d, c in self.predicted_inconclusive.items()
            },
            "violations": [v.to_dict() for v in self.violations],
            "scope": self.scope,
        }


def _band_probability(q: float, lo: float, hi: float, N: int) -> float:
    """Hoeffding bound on P(frequency in (lo, hi)) when the true rate is q."""
    if lo < q < hi:
        return 1.0
    dist = q - hi if q >= hi else lo - q
    return min(1.0, math.exp(-2 * N * dist * dist))


def governs(
    P: ProbabilityMeasure,
    E: ExperimentModel,
    delta_grid=("4/5", "9/10", "19/20"),
    levels=(1, 2, 3),
    event_budget: int = DEFAULT_EVENT_BUDGET,
    N: int = DEFAULT_N,
    epsilon=DEFAULT_EPSILON,
    alpha=DEFAULT_ALPHA,
    measure_id: str = "P",
    experiment_id: str = "E",
) -> GovernanceReport:
    """Check T(P, delta_T) against the practically-certain events of E.

    For each threshold in the grid and each level, every event with
    P-bar(A) >= delta_T is judged on one shared run of N trials of E^n. A
    not-certain verdict is a violation; inconclusive verdicts are counted
    and flagged. The measure governs at scope when at least one threshold
    has no violation at any tested level.
    """
    if P.space != E.space:
        raise SpaceMismatch("measure and experiment live on different sample spaces")
    grid = sorted(as_threshold(d).delta for d in delta_grid)
    if not grid:
        raise ValueError("empty threshold grid")
    levels = sorted(set(int(n) for n in levels))
    epsilon, alpha = float(epsilon), float(alpha)
    g = guardband(N, alpha)
    lo_band, hi_band = 1 - epsilon - g, 1 - epsilon + g
    size = P.space.size

    events_tested = {d: {n: 0 for n in levels} for d in grid}
    inconclusive = {d: 0 for d in grid}
    predicted = {d: 0.0 for d in grid}
    violations = []
    truncated = []
    for n in levels:
        run = run_trials(E, n, N)
        idx = run.astype(np.int64) @ (size ** np.arange(n - 1, -1, -1, dtype=np.int64))
        hist = np.bincount(idx, minlength=size**n)
        count = 0
        for pbar, A in events_by_probability(P, n, grid[0], event_budget):
            count += 1
            freq = float(hist[A.indices()].sum()) / N
            verdict = _verdict(freq, epsilon, g)
            band_p = _band_probability(float(pbar), lo_band, hi_band, N)
            for d in grid:
                if pbar < d:
                    break
                events_tested[d][n] += 1
                predicted[d] += band_p
                if verdict == "inconclusive":
                    inconclusive[d] += 1
                elif verdict == "not-certain":
                    violations.append(Violation(d, A, pbar, verdict, freq))
        if count >= event_budget:
            truncated.append(n)

    passing = [d for d in grid if not any(v.delta == d for v in violations)]
    violations.sort(key=lambda v: (v.delta, v.event.level, -v.typicality, v.event.indices()))
    scope = {
        "levels": levels,
        "event_budget": event_budget,
        "levels_truncated_by_budget": truncated,
        "N": N,
        "epsilon": epsilon,
        "alpha": alpha,
        "guardband": g,
        "thresholds_near_one": {
            rational_str(d): as_threshold(d).is_near_one(Fraction(repr(epsilon))) for d in grid
        },
        "note": "verdict covers only the listed levels, thresholds and events",
    }
    return GovernanceReport(measure_id, experiment_id, grid, levels, events_tested,
                            violations, inconclusive, predicted, passing, scope)


@dataclass(frozen=True)
class AmbiguityWitness:
    event: LeveledEvent
    sigma: Fraction
    k: int
    prob_under_P1: Fraction
    prob_under_P2: Fraction
    delta: Fraction
    low_event: FreqEventSpec
    high_event: FreqEventSpec
    tail_low_P1: Fraction | float
    tail_high_P2: Fraction | float

    @property
    def disjoint_pair(self):
        return self.low_event, self.high_event

    def verify(self, materialize_budget: int = 10**6, exact_max_k: int | None = 5000) -> dict:
        """Recompute every invariant from scratch.

        Tails are recomputed exactly when k <= exact_max_k; disjointness is
        checked by enumeration when Omega^(k) fits the budget and from the
        intervals otherwise.
        """
        exact = exact_max_k is None or self.k <= exact_max_k
        mode = None if exact else EXACT_MAX_K
        low = freq_event_prob(self.prob_under_P1, self.low_event.interval, self.k, mode)
        high = freq_event_prob(self.prob_under_P2, self.high_event.interval, self.k, mode)
        delta = self.delta if exact else float(self.delta)
        total = self.event.space.cardinality(self.low_event.level)
        if total <= materialize_budget:
            disjoint = self.low_event.materialize(materialize_budget).isdisjoint(
                self.high_event.materialize(materialize_budget))
            how = "enumeration"
        else:
            disjoint = self.low_event.interval.isdisjoint(self.high_event.interval)
            how = "interval"
        return {
            "measures_differ": self.prob_under_P1 != self.prob_under_P2,
            "sigma_between": min(self.prob_under_P1, self.prob_under_P2) < self.sigma
            < max(self.prob_under_P1, self.prob_under_P2),
            "low_typical_under_P1": low >= delta,
            "high_typical_under_P2": high >= delta,
            "disjoint": disjoint,
            "disjointness_method": how,
            "exact_tails": exact,
        }

    def to_dict(self):
        return {
            "event": event_to_json(self.event),
            "sigma": rational_str(self.sigma),
            "k": self.k,
            "prob_under_P1": rational_str(self.prob_under_P1),
            "prob_under_P2": rational_str(self.prob_under_P2),
            "delta": rational_str(self.delta),
            "disjoint_pair": [event_to_json(self.low_event), event_to_json(self.high_event)],
            "tail_low_P1": rational_str(self.tail_low_P1),
            "tail_high_P2": rational_str(self.tail_high_P2),
        }


def _scan_both_typical(p1: Fraction, p2: Fraction, sigma: Fraction, delta: Fraction,
                       k_cap: int, exact_max_k: int | None):
    low, high = Interval01.lower(sigma), Interval01.upper(sigma)
    k_exact = k_cap if exact_max_k is None else min(exact_max_k, k_cap)
    for k in range(1, k_exact + 1):
        t1 = freq_event_prob(p1, low, k, None)
        if t1 < delta:
            continue
        t2 = freq_event_prob(p2, high, k, None)
        if t2 >= delta:
            return k, t1, t2
    a, b = sigma.numerator, sigma.denominator
    start, chunk = k_exact + 1, 50_000
    while start <= k_cap:
        ks = np.arange(start, min(start + chunk, k_cap + 1), dtype=np.int64)
        if a * int(ks[-1]) < 2**62:
            jmin = (a * ks + b - 1) // b  # ceil(sigma k): first count in [sigma, 1]
        else:
            jmin = np.array([low.count_range(int(k))[1] + 1 for k in ks])
        t1 = binom.cdf(jmin - 1, ks, float(p1))
        t2 = binom.sf(jmin - 1, ks, float(p2))
        ok = np.nonzero((t1 >= float(delta)) & (t2 >= float(delta)))[0]
        if len(ok):
            i = int(ok[0])
            return int(ks[i]), float(t1[i]), float(t2[i])
        start += chunk
    return None


def probabilistic_ambiguity_witness(
    P1: ProbabilityMeasure,
    P2: ProbabilityMeasure,
    delta,
    k_cap: int = WITNESS_K_CAP,
    exact_max_k: int | None = EXACT_MAX_K,
) -> AmbiguityWitness:
    """Disjoint frequency events, one typical under each measure.

    Picks the level-1 singleton A where P2 exceeds P1 the most, sigma at the
    midpoint, and the smallest probed k with S(A,[0,sigma),k) typical for P1
    and S(A,[sigma,1],k) typical for P2. A class containing both typical
    classes would then hold two disjoint events.
    """
    if P1.space != P2.space:
        raise SpaceMismatch("measures live on different sample spaces")
    if P1.weights == P2.weights:
        raise MeasuresEqual("the two measures coincide; no witness exists")
    delta = as_threshold(delta).delta
    gaps = [w2 - w1 for w1, w2 in zip(P1.weights, P2.weights)]
    i = max(range(len(gaps)), key=lambda j: (gaps[j], -j))
    A = LeveledEvent(P1.space, 1, frozenset([(i,)]))
    p1, p2 = P1.weights[i], P2.weights[i]
    sigma = (p1 + p2) / 2
    found = _scan_both_typical(p1, p2, sigma, delta, k_cap, exact_max_k)
    if found is None:
        raise BudgetExceeded(f"no witness with k <= {k_cap}; raise k_cap")
    k, t1, t2 = found
    return AmbiguityWitness(
        A, sigma, k, p1, p2, delta,
        FreqEventSpec(A, Interval01.lower(sigma), k),
        FreqEventSpec(A, Interval01.upper(sigma), k),
        t1, t2,
    )


@dataclass
class ExperimentalAmbiguityReport:
    first: GovernanceReport
    second: GovernanceReport
    equivalence: object = None

    @property
    def outcome(self) -> str:
        if not (self.first.governs and self.second.governs):
            return "not-applicable"
        return "consistent" if self.equivalence.equivalent else "inconsistent"

    def to_dict(self):
        return {
            "outcome": self.outcome,
            "first": self.first.to_dict(),
            "second": self.second.to_dict(),
            "equivalence": None if self.equivalence is None else self.equivalence.to_dict(),
            "note": "an inconsistent outcome is evidence against the equivalence "
                    "conjecture at this scope, not a software fault",
        }


def experimental_ambiguity_check(
    P: ProbabilityMeasure,
    E1: ExperimentModel,
    E2: ExperimentModel,
    probe_events=None,
    ids=("E1", "E2"),
    **params,
) -> ExperimentalAmbiguityReport:
    """If P governs both experiments, test them for empirical equivalence."""
    first = governs(P, E1, experiment_id=ids[0], **params)
    second = governs(P, E2, experiment_id=ids[1], **params)
    report = ExperimentalAmbiguityReport(first, second)
    if first.governs and second.governs:
        if probe_events is None:
            probe_events = default_probe_events(P.space, levels=first.levels_tested,
                                                n_random=0)
        report.equivalence = empirically_equivalent(
            E1, E2, probe_events, params.get("N", DEFAULT_N), params.get("alpha", DEFAULT_ALPHA))
    return report

"""Frequency events S(A, I, k) and their probabilities.

The probability of S(A, I, k) only depends on p = P-bar(A): the number of
blocks landing in A is Binomial(k, p). Up to ``EXACT_MAX_K`` repetitions the
binomial sum is evaluated in exact integer arithmetic; beyond that it falls
back to scipy's binomial distribution in floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.stats import binom

from .errors import BudgetExceeded, SpaceMismatch
from .measure import (
    Interval01,
    LeveledEvent,
    ProbabilityMeasure,
    as_fraction,
    as_threshold,
    extended_prob,
)

EXACT_MAX_K = 200
ENUMERATION_BUDGET = 10**6
SCAN_CAP = 10**6


@dataclass(frozen=True)
class FreqEventSpec:
    """S(base, interval, reps): k-sequences of level-n outcomes whose relative
    frequency of ``base`` lies in ``interval``.

    The event lives at level n*k and is kept symbolic; ``materialize`` builds
    the explicit tuple set when it is small enough.
    """

    base: LeveledEvent
    interval: Interval01
    reps: int

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.interval.is_empty():
            raise ValueError(f"interval {self.interval} is empty")

    @property
    def space(self):
        return self.base.space

    @property
    def level(self) -> int:
        return self.base.level * self.reps

    def achievable_counts(self) -> range:
        if self.base.is_empty():
            return range(0, 1)
        if self.base.is_full():
            return range(self.reps, self.reps + 1)
        return range(0, self.reps + 1)

    def counts_inside(self) -> list[int]:
        jmin, jmax = self.interval.count_range(self.reps)
        return [j for j in self.achievable_counts() if jmin <= j <= jmax]

    def is_full(self) -> bool:
        return len(self.counts_inside()) == len(self.achievable_counts())

    def is_empty(self) -> bool:
        return not self.counts_inside()

    def count(self, outcome) -> int:
        n = self.base.level
        return sum(
            tuple(outcome[i * n:(i + 1) * n]) in self.base.tuples for i in range(self.reps)
        )

    def __contains__(self, outcome) -> bool:
        outcome = self.space.as_indices(outcome)
        if len(outcome) != self.level:
            return False
        return Fraction(self.count(outcome), self.reps) in self.interval

    def probability(self, P: ProbabilityMeasure):
        return freq_event_prob(extended_prob(P, self.base), self.interval, self.reps)

    def isdisjoint(self, other: "FreqEventSpec") -> bool:
        """Disjointness decided from the intervals when base and k agree."""
        if (other.base, other.reps) == (self.base, self.reps):
            return not set(self.counts_inside()) & set(other.counts_inside())
        return materialize_freq_event(self).isdisjoint(materialize_freq_event(other))

    def materialize(self, budget: int = ENUMERATION_BUDGET) -> LeveledEvent:
        return materialize_freq_event(self, budget)


def materialize_freq_event(spec: FreqEventSpec, budget: int = ENUMERATION_BUDGET) -> LeveledEvent:
    space = spec.space
    total = space.cardinality(spec.level)
    if total > budget:
        raise BudgetExceeded(f"|Omega|^{spec.level} = {total} tuples exceeds budget {budget}")
    blocks = [(t, t in spec.base.tuples) for t in space.outcomes(spec.base.level)]
    keep = set(spec.counts_inside())
    tuples = set()
    for seq in itertools.product(blocks, repeat=spec.reps):
        if sum(hit for _, hit in seq) in keep:
            tuples.add(tuple(itertools.chain.from_iterable(t for t, _ in seq)))
    return LeveledEvent(space, spec.level, frozenset(tuples))


def _exact_binomial_sum(p: Fraction, k: int, jmin: int, jmax: int) -> Fraction:
    # p = a/d, 1-p = b/d: the sum is an integer over d^k
    a, d = p.numerator, p.denominator
    b = d - a
    total = 0
    for j in range(jmin, jmax + 1):
        total += math.comb(k, j) * a**j * b ** (k - j)
    return Fraction(total, d**k)


def _float_binomial_sum(p: float, k, jmin, jmax):
    """Vectorised over k/jmin/jmax arrays; picks the tail that avoids cancellation."""
    k, jmin, jmax = np.broadcast_arrays(np.asarray(k), np.asarray(jmin), np.asarray(jmax))
    upper = binom.sf(jmin - 1, k, p)  # P(J >= jmin)
    above = binom.sf(jmax, k, p)  # P(J > jmax)
    out = np.where(jmax >= k, upper, upper - above)
    lower_side = jmin <= 0
    out = np.where(lower_side, binom.cdf(jmax, k, p), out)
    out = np.where(jmin > jmax, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def freq_event_prob(p, interval: Interval01, k: int, exact_max_k: int | None = EXACT_MAX_K):
    """P-bar[S(A, I, k)] given p = P-bar(A).

    Exact Fraction for ``k <= exact_max_k`` (``None`` means always exact),
    float otherwise.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    exact = exact_max_k is None or k <= exact_max_k
    if isinstance(p, float) and not exact:
        pf = p
    else:
        p = as_fraction(p)
        pf = float(p)
    if not (0 <= pf <= 1):
        raise ValueError(f"p = {p} outside [0, 1]")
    jmin, jmax = interval.count_range(k)
    if jmin > jmax:
        return Fraction(0) if exact else 0.0
    if pf in (0.0, 1.0):
        j = 0 if pf == 0.0 else k
        hit = jmin <= j <= jmax
        return Fraction(int(hit)) if exact else float(hit)
    if exact:
        return _exact_binomial_sum(p, k, jmin, jmax)
    return float(_float_binomial_sum(pf, k, jmin, jmax))


def bernoulli_limit_profile(
    p,
    sigma,
    k_max: int,
    side: Literal["upper", "lower"],
    exact_max_k: int | None = EXACT_MAX_K,
) -> list[tuple[int, Fraction | float]]:
    """Probabilities of S(A,[sigma,1],k) (upper) or S(A,[0,sigma),k) (lower) for k = 1..k_max."""
    sigma = as_fraction(sigma)
    if not (0 < sigma <= 1):
        raise ValueError("sigma must lie in (0, 1]")
    if side == "upper":
        interval = Interval01.upper(sigma)
    elif side == "lower":
        interval = Interval01.lower(sigma)
    else:
        raise ValueError(f"side must be 'upper' or 'lower', not {side!r}")
    p = as_fraction(p)
    exact_ks = k_max if exact_max_k is None else min(k_max, exact_max_k)
    out = []
    if 0 < p < 1 and exact_ks > 0:
        # row[j] = C(k,j) a^j b^(k-j), advanced one k at a time
        a, d = p.numerator, p.denominator
        b = d - a
        row = [1]
        for k in range(1, exact_ks + 1):
            row = [b * x + a * y for x, y in zip(row + [0], [0] + row)]
            jmin, jmax = interval.count_range(k)
            out.append((k, Fraction(sum(row[jmin:jmax + 1]), d**k)))
    else:
        out = [(k, freq_event_prob(p, interval, k, None)) for k in range(1, exact_ks + 1)]
    out += [(k, freq_event_prob(p, interval, k, exact_max_k)) for k in range(exact_ks + 1, k_max + 1)]
    return out


def hoeffding_k(gap, eps) -> int:
    """Smallest k with exp(-2 k gap^2) <= eps."""
    gap, eps = float(gap), float(eps)
    if gap <= 0:
        raise ValueError("gap must be positive")
    if eps >= 1:
        return 1
    return max(1, math.ceil(math.log(1 / eps) / (2 * gap * gap)))


@dataclass(frozen=True)
class DefinitivelyCert:
    status: Literal["holds", "fails", "undecided"]
    k0: int | None
    horizon: int | None
    method: Literal["analytic", "finite-horizon"]
    justification: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.status not in ("holds", "fails", "undecided"):
            raise ValueError(f"bad status {self.status!r}")
        if self.method == "analytic" and self.status == "holds" and not self.justification:
            raise ValueError("analytic 'holds' needs a justification record")
        if self.method == "finite-horizon" and self.horizon is None:
            raise ValueError("finite-horizon certificates must carry their horizon")

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "k0": self.k0,
            "horizon": self.horizon,
            "method": self.method,
            "justification": self.justification,
        }


def _upper_tails(p: Fraction, sigma: Fraction, ks, exact_max_k):
    """P(J/k >= sigma) for each k in ``ks``; exact where allowed."""
    interval = Interval01.upper(sigma)
    exact_ks = [k for k in ks if exact_max_k is None or k <= exact_max_k]
    float_ks = np.array([k for k in ks if not (exact_max_k is None or k <= exact_max_k)])
    out = {k: freq_event_prob(p, interval, k, exact_max_k) for k in exact_ks}
    if len(float_ks):
        jmin = np.array([interval.count_range(int(k))[0] for k in float_ks])
        vals = _float_binomial_sum(float(p), float_ks, jmin, float_ks)
        out.update(zip(float_ks.tolist(), vals.tolist()))
    return out


def definitively_in_typicality(
    P: ProbabilityMeasure,
    delta,
    A,
    sigma,
    scan_cap: int = SCAN_CAP,
    exact_max_k: int | None = EXACT_MAX_K,
) -> DefinitivelyCert:
    """Decide S(A,[sigma,1],k) in T(P, delta) for all large k.

    When sigma < P-bar(A) the Hoeffding bound gives a k beyond which the
    tail stays >= delta; the finite stretch below it is scanned to report the
    smallest k0 from which membership holds without interruption.
    """
    if A.space != P.space:
        raise SpaceMismatch("measure and event live on different sample spaces")
    delta = as_threshold(delta).delta
    sigma = as_fraction(sigma)
    if not (0 < sigma <= 1):
        raise ValueError("sigma must lie in (0, 1]")
    p = as_fraction(extended_prob(P, A))
    if sigma == p:
        return DefinitivelyCert("undecided", None, None, "analytic",
                                {"reason": "sigma equals P-bar(A); limit not covered"})
    gap = abs(p - sigma)
    if sigma > p:
        k_fail = hoeffding_k(gap, delta)
        return DefinitivelyCert("fails", None, None, "analytic", {
            "bound": "hoeffding",
            "p": str(p),
            "sigma": str(sigma),
            "k_beyond_which_tail_below_delta": k_fail,
        })
    k_h = hoeffding_k(gap, 1 - delta)
    justification = {
        "bound": "hoeffding",
        "p": str(p),
        "sigma": str(sigma),
        "k_hoeffding": k_h,
        "statement": "tail >= 1 - exp(-2 k (p - sigma)^2) >= delta for k >= k_hoeffding",
    }
    if k_h > scan_cap:
        justification["scanned"] = None
        return DefinitivelyCert("holds", k_h, k_h, "analytic", justification)
    k0 = k_h
    for lo in range(k_h - 1, 0, -4096):
        ks = list(range(lo, max(lo - 4096, 0), -1))
        tails = _upper_tails(p, sigma, ks, exact_max_k)
        stop = False
        for k in ks:
            t = tails[k]
            ok = t >= (float(delta) if isinstance(t, float) else delta)
            if not ok:
                stop = True
                break
            k0 = k
        if stop:
            break
    justification["scanned"] = [k0, k_h]
    return DefinitivelyCert("holds", k0, k_h, "analytic", justification)


def horizon_ladder(horizon: int, window: int = 3) -> list[int]:
    """Probe points {horizon, horizon/2, ..., horizon/2^(window-1)}, ascending."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    return sorted({max(1, horizon >> i) for i in range(window)})


def definitively_in_oracle(C, base, interval: Interval01, horizon: int, window: int = 3) -> DefinitivelyCert:
    """Finite-horizon check that S(base, interval, k) is in C for the top
    ``window`` rungs of a halving ladder ending at ``horizon``.

    ``k0`` is the smallest rung from which membership holds up to the horizon.
    Black-box classes never get an analytic certificate.
    """
    ladder = horizon_ladder(horizon, window)
    k0 = None
    for k in reversed(ladder):
        if not C.contains(FreqEventSpec(base, interval, k)):
            break
        k0 = k
    status = "holds" if k0 == ladder[0] else "fails"
    return DefinitivelyCert(status, k0, horizon, "finite-horizon",
                            {"ladder": ladder})

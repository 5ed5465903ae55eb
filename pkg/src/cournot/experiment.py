"""Seeded stochastic experiments and the frequency test for practical certainty.

A trial of E^n is n successive draws of E. All events of one level are
judged on the same run of trials (one random stream per level and purpose),
so the empirical class inherits upward closure and disjointness from the
decision rule instead of from luck.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from .cclass import CClass
from .errors import OracleFailure, SpaceMismatch
from .freq import FreqEventSpec
from .measure import LeveledEvent, ProbabilityMeasure, SampleSpace, as_fraction
from .serialize import event_to_json, rational_str

DEFAULT_N = 10_000
DEFAULT_EPSILON = 0.02
DEFAULT_ALPHA = 0.01
MAX_DRAWS = 50_000_000


def _check_distribution(values, what):
    values = tuple(as_fraction(v) for v in values)
    if any(v < 0 for v in values):
        raise ValueError(f"{what} has a negative entry")
    if sum(values) != 1:
        raise ValueError(f"{what} sums to {sum(values)}, not 1")
    return values


@dataclass(frozen=True)
class ExperimentModel:
    space: SampleSpace
    kind: Literal["iid", "markov"]
    seed: int
    dist: tuple | None = None
    init: tuple | None = None
    trans: tuple | None = None

    def __post_init__(self):
        size = self.space.size
        if self.kind == "iid":
            if self.dist is None or len(self.dist) != size:
                raise ValueError(f"iid experiment needs {size} probabilities")
            object.__setattr__(self, "dist", _check_distribution(self.dist, "dist"))
        elif self.kind == "markov":
            if self.init is None or self.trans is None:
                raise ValueError("markov experiment needs init and trans")
            object.__setattr__(self, "init", _check_distribution(self.init, "init"))
            rows = tuple(_check_distribution(r, f"trans row {i}") for i, r in enumerate(self.trans))
            if len(rows) != size or any(len(r) != size for r in rows):
                raise ValueError(f"transition matrix must be {size}x{size}")
            object.__setattr__(self, "trans", rows)
        else:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @classmethod
    def iid(cls, space, dist, seed=0):
        return cls(space, "iid", seed, dist=tuple(dist))

    @classmethod
    def markov(cls, space, init, trans, seed=0):
        return cls(space, "markov", seed, init=tuple(init), trans=tuple(tuple(r) for r in trans))

    def with_seed(self, seed: int) -> "ExperimentModel":
        return ExperimentModel(self.space, self.kind, seed, self.dist, self.init, self.trans)

    def law(self) -> ProbabilityMeasure:
        """One-step law of an iid experiment as a probability measure."""
        if self.kind != "iid":
            raise ValueError("only iid experiments have a product law")
        return ProbabilityMeasure(self.space, self.dist)

    def to_json(self) -> dict:
        labels = self.space.labels
        if self.kind == "iid":
            return {"kind": "iid", "dist": {l: rational_str(w) for l, w in zip(labels, self.dist)},
                    "seed": self.seed}
        return {
            "kind": "markov",
            "init": {l: rational_str(w) for l, w in zip(labels, self.init)},
            "trans": [[rational_str(w) for w in row] for row in self.trans],
            "seed": self.seed,
        }


def _rng(E: ExperimentModel, level: int, purpose: str) -> np.random.Generator:
    key = (level, zlib.crc32(purpose.encode()))
    return np.random.default_rng(np.random.SeedSequence(int(E.seed), spawn_key=key))


def _cumulative(weights):
    cum = np.cumsum([float(w) for w in weights])
    cum[-1] = 1.0
    return cum


@lru_cache(maxsize=32)
def run_trials(E: ExperimentModel, n: int, count: int, purpose: str = "trials") -> np.ndarray:
    """``count`` trials of E^n as a read-only (count, n) array of outcome indices.

    Deterministic in (model, seed, n, count, purpose).
    """
    if n < 1 or count < 1:
        raise ValueError("n and count must be >= 1")
    rng = _rng(E, n, purpose)
    size = E.space.size
    if E.kind == "iid":
        u = rng.random((count, n))
        out = np.searchsorted(_cumulative(E.dist), u, side="right")
    else:
        total = count * n
        u = rng.random(total)
        trans = [_cumulative(row) for row in E.trans]
        nxt = [np.minimum(np.searchsorted(c, u, side="right"), size - 1) for c in trans]
        states = np.empty(total, dtype=np.int64)
        s = min(int(np.searchsorted(_cumulative(E.init), u[0], side="right")), size - 1)
        states[0] = s
        for i in range(1, total):
            s = nxt[s][i]
            states[i] = s
        out = states.reshape(count, n)
    out = np.minimum(out, size - 1).astype(np.int8 if size <= 127 else np.int16)
    out.setflags(write=False)
    return out


def _block_index(run: np.ndarray, size: int, n: int) -> np.ndarray:
    """Row-wise lexicographic index of consecutive n-blocks."""
    blocks = run.reshape(run.shape[0], -1, n).astype(np.int64)
    weights = size ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return blocks @ weights


def _lookup(event: LeveledEvent) -> np.ndarray:
    table = np.zeros(event.space.cardinality(event.level), dtype=bool)
    table[event.indices()] = True
    return table


def block_counts(E: ExperimentModel, base: LeveledEvent, reps: int, N: int,
                 purpose: str = "trials") -> np.ndarray:
    """Per trial of E^(n*reps): how many of its reps blocks fall in base."""
    level = base.level * reps
    if N * level > MAX_DRAWS:
        raise OracleFailure(f"simulating {N} trials at level {level} exceeds {MAX_DRAWS} draws")
    run = run_trials(E, level, N, purpose)
    idx = _block_index(run, E.space.size, base.level)
    return _lookup(base)[idx].sum(axis=1)


def trial_hits(E: ExperimentModel, A, N: int, purpose: str = "trials") -> np.ndarray:
    if A.space != E.space:
        raise SpaceMismatch("experiment and event live on different sample spaces")
    if isinstance(A, FreqEventSpec):
        jmin, jmax = A.interval.count_range(A.reps)
        counts = block_counts(E, A.base, A.reps, N, purpose)
        return (counts >= jmin) & (counts <= jmax)
    return block_counts(E, A, 1, N, purpose) == 1


def relative_frequency(E: ExperimentModel, A, N: int = DEFAULT_N) -> float:
    """Fraction of N trials of E^(A.level) that land in A."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return float(trial_hits(E, A, N).mean())


def guardband(N: int, alpha: float) -> float:
    """Hoeffding half-width sqrt(ln(2/alpha) / 2N)."""
    return math.sqrt(math.log(2 / alpha) / (2 * N))


def _verdict(freq: float, epsilon: float, g: float) -> str:
    if freq >= 1 - epsilon + g:
        return "certain"
    if freq <= 1 - epsilon - g:
        return "not-certain"
    return "inconclusive"


@dataclass(frozen=True)
class PracticalCertaintyDecision:
    event: object
    sequence_length: int
    observed_frequency: float
    epsilon: float
    verdict: str
    confidence_bound: float

    def to_dict(self):
        return {
            "event": event_to_json(self.event),
            "sequence_length": self.sequence_length,
            "observed_frequency": self.observed_frequency,
            "epsilon": self.epsilon,
            "verdict": self.verdict,
            "confidence_bound": self.confidence_bound,
        }


def _check_rule(epsilon, alpha):
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


def is_practically_certain(E, A, N=DEFAULT_N, epsilon=DEFAULT_EPSILON, alpha=DEFAULT_ALPHA):
    """Frequency test with a Hoeffding guardband.

    certain if f >= 1-eps+g, not-certain if f <= 1-eps-g, inconclusive between.
    """
    epsilon, alpha = float(epsilon), float(alpha)
    _check_rule(epsilon, alpha)
    freq = relative_frequency(E, A, N)
    g = guardband(N, alpha)
    return PracticalCertaintyDecision(A, N, freq, epsilon, _verdict(freq, epsilon, g), g)


class EmpiricalClass(CClass):
    """Events the frequency test calls certain; inconclusive counts as outside."""

    kind = "empirical"

    def __init__(self, E: ExperimentModel, N=DEFAULT_N, epsilon=DEFAULT_EPSILON, alpha=DEFAULT_ALPHA):
        super().__init__(E.space)
        self.experiment = E
        self.N = int(N)
        self.epsilon, self.alpha = float(epsilon), float(alpha)
        _check_rule(self.epsilon, self.alpha)
        self.guard = guardband(self.N, self.alpha)
        self.support_note = f"levels with N*level <= {MAX_DRAWS} simulated draws"
        self._verdicts: dict = {}
        self._counts: dict = {}
        self.inconclusive: set = set()

    def verdict(self, event) -> str:
        if event not in self._verdicts:
            if isinstance(event, FreqEventSpec):
                key = (event.base, event.reps)
                if key not in self._counts:
                    self._counts[key] = block_counts(self.experiment, event.base, event.reps, self.N)
                counts = self._counts[key]
                jmin, jmax = event.interval.count_range(event.reps)
                freq = float(((counts >= jmin) & (counts <= jmax)).mean())
            else:
                freq = relative_frequency(self.experiment, event, self.N)
            v = _verdict(freq, self.epsilon, self.guard)
            self._verdicts[event] = v
            if v == "inconclusive":
                self.inconclusive.add(event)
        return self._verdicts[event]

    def _member(self, event):
        return self.verdict(event) == "certain"

    def describe(self):
        return {**super().describe(), "experiment": self.experiment.to_json(),
                "N": self.N, "epsilon": self.epsilon, "alpha": self.alpha}


def empirical_cclass(E, N=DEFAULT_N, epsilon=DEFAULT_EPSILON, alpha=DEFAULT_ALPHA) -> EmpiricalClass:
    return EmpiricalClass(E, N, epsilon, alpha)


@dataclass
class EmpiricalEquivalenceReport:
    equivalent: bool
    band: float
    N: int
    alpha: float
    rows: list = field(default_factory=list)

    def to_dict(self):
        return {
            "equivalent": self.equivalent,
            "band": self.band,
            "N": self.N,
            "alpha": self.alpha,
            "rows": [
                {"event": event_to_json(ev), "f1": f1, "f2": f2, "separated": sep}
                for ev, f1, f2, sep in self.rows
            ],
        }


def empirically_equivalent(E1, E2, probe_events, N=DEFAULT_N, alpha=DEFAULT_ALPHA):
    """Two-sample frequency comparison on each probe.

    Each frequency is within t = sqrt(ln(4m/alpha)/2N) of its mean except with
    probability alpha/(2m), so a gap above 2t separates the experiments with
    family-wise error at most alpha over the m probes.
    """
    if E1.space != E2.space:
        raise SpaceMismatch("experiments live on different sample spaces")
    probe_events = list(probe_events)
    if not probe_events:
        raise ValueError("need at least one probe event")
    m = len(probe_events)
    band = 2 * math.sqrt(math.log(4 * m / alpha) / (2 * N))
    rows = []
    for ev in probe_events:
        f1 = relative_frequency(E1, ev, N)
        f2 = relative_frequency(E2, ev, N)
        rows.append((ev, f1, f2, abs(f1 - f2) > band))
    return EmpiricalEquivalenceReport(not any(r[3] for r in rows), band, N, alpha, rows)

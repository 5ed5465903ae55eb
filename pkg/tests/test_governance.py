from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cournot.errors import BudgetExceeded, MeasuresEqual, SpaceMismatch
from cournot.experiment import ExperimentModel
from cournot.governance import (
    events_by_probability,
    experimental_ambiguity_check,
    governs,
    probabilistic_ambiguity_witness,
)
from cournot.measure import LeveledEvent, extended_prob, make_measure

from strategies import COIN, DIE3, coin_measure, measures

STICKY = ((Fraction(99, 100), Fraction(1, 100)), (Fraction(9, 100), Fraction(91, 100)))


def iid(p, seed=0):
    p = Fraction(p)
    return ExperimentModel.iid(COIN, (p, 1 - p), seed)


@settings(max_examples=25)
@given(measures(), st.integers(1, 2), st.fractions(Fraction(1, 2), 1, max_denominator=20))
def test_events_by_probability_matches_enumeration(P, n, min_prob):
    got = list(events_by_probability(P, n, min_prob, budget=10**6))
    m = P.space.cardinality(n)
    expected = sorted(
        (extended_prob(P, A) for A in (LeveledEvent.from_mask(P.space, n, x) for x in range(1 << m))
         if extended_prob(P, A) >= min_prob), reverse=True)
    assert [p for p, _ in got] == expected
    assert all(extended_prob(P, A) == p for p, A in got)
    assert len({A for _, A in got}) == len(got)


def test_events_by_probability_budget():
    assert len(list(events_by_probability(coin_measure("1/2"), 3, "1/2", budget=7))) == 7


def test_matched_law_governs():
    rep = governs(coin_measure("9/10"), iid("9/10"))
    assert rep.governs and rep.verdict == "governs-at-scope"
    top = max(rep.threshold_grid)
    assert top in rep.passing_thresholds
    assert not rep.violations_at(top)
    d = rep.to_dict()
    assert d["scope"]["levels"] == [1, 2, 3] and d["scope"]["N"] == 10_000


def test_mismatched_law_violated():
    # at levels <= 3 every fair tuple weighs >= 1/8, so only deeper levels discriminate
    rep = governs(coin_measure("1/2"), iid("9/10"), levels=(1, 2, 3, 4, 5))
    assert not rep.governs
    # the failing typical events drop heads-heavy tuples and keep the tails-heavy ones
    worst = min(rep.violations, key=lambda v: v.observed_frequency)
    assert ("H",) * worst.event.level not in worst.event
    assert worst.observed_frequency < 0.5


def test_biased_measure_vs_fair_coin_fails_at_level_one():
    rep = governs(coin_measure("9/10"), iid("1/2", 7))
    assert not rep.governs
    assert rep.violations_at("4/5", level=1)


def test_markov_with_matching_marginal_fails_at_level_two():
    E = ExperimentModel.markov(COIN, ("9/10", "1/10"), STICKY, seed=3)
    rep = governs(coin_measure("9/10"), E)
    assert not rep.governs
    # the one-step marginal is right: at the top threshold only pairs fail
    assert not rep.violations_at("19/20", level=1)
    assert rep.violations_at("19/20", level=2)


def test_monotone_grid():
    rep = governs(coin_measure("9/10"), iid("9/10", 1), delta_grid=("3/5", "4/5", "9/10", "19/20", "99/100"))
    passing = set(rep.passing_thresholds)
    for i, d in enumerate(rep.threshold_grid):
        if d in passing:
            assert set(rep.threshold_grid[i:]) <= passing


def test_governance_space_mismatch():
    with pytest.raises(SpaceMismatch):
        governs(make_measure(DIE3, ["1/3"] * 3), iid("1/2"))


def test_inconclusive_within_prediction():
    rep = governs(coin_measure("9/10"), iid("9/10", 2))
    top = max(rep.threshold_grid)
    assert rep.inconclusive[top] <= rep.predicted_inconclusive[top] + 3


def test_witness_known_case():
    w = probabilistic_ambiguity_witness(coin_measure("2/5"), coin_measure("7/10"), "999/1000")
    assert w.event == COIN.event("H")
    assert w.sigma == Fraction(11, 20)
    # brute-force scan over k with exact binomial tails gives 102
    assert w.k == 102
    checks = w.verify()
    assert all(checks[k] for k in ("measures_differ", "sigma_between", "low_typical_under_P1",
                                   "high_typical_under_P2", "disjoint"))


def test_witness_small_k_enumerated():
    w = probabilistic_ambiguity_witness(coin_measure("2/5"), coin_measure("7/10"), "7/10")
    assert w.k == 6
    checks = w.verify()
    assert checks["disjointness_method"] == "enumeration" and checks["disjoint"]
    low, high = w.disjoint_pair
    assert extended_prob(coin_measure("2/5"), low.materialize()) == Fraction(513, 625)
    assert extended_prob(coin_measure("7/10"), high.materialize()) == Fraction(74431, 100000)


def test_witness_equal_measures():
    with pytest.raises(MeasuresEqual):
        probabilistic_ambiguity_witness(coin_measure("1/2"), coin_measure("1/2"), "9/10")


def test_witness_k_grows_as_gap_shrinks():
    ks = [probabilistic_ambiguity_witness(coin_measure("1/2"), coin_measure(Fraction(1, 2) + gap),
                                          "3/5").k
          for gap in (Fraction(1, 10), Fraction(1, 100), Fraction(1, 1000))]
    assert ks == sorted(ks) and ks[-1] > 10_000
    with pytest.raises(BudgetExceeded):
        probabilistic_ambiguity_witness(coin_measure("1/2"), coin_measure("501/1000"), "3/5",
                                        k_cap=1000)


def test_witness_on_three_outcomes():
    P1 = make_measure(DIE3, ["1/2", "1/4", "1/4"])
    P2 = make_measure(DIE3, ["1/4", "1/4", "1/2"])
    w = probabilistic_ambiguity_witness(P1, P2, "9/10")
    assert w.event == DIE3.event("c")
    assert w.verify()["disjoint"]


def test_experimental_ambiguity_same_law():
    rep = experimental_ambiguity_check(coin_measure("9/10"), iid("9/10", 1), iid("9/10", 2))
    assert rep.outcome == "consistent"


def test_experimental_ambiguity_perturbed_law():
    rep = experimental_ambiguity_check(coin_measure("9/10"), iid("9/10", 1), iid("3/5", 2))
    assert rep.outcome == "not-applicable" and rep.equivalence is None


def test_experimental_ambiguity_adversarial_pair():
    E2 = ExperimentModel.markov(COIN, ("9/10", "1/10"), STICKY, seed=4)
    rep = experimental_ambiguity_check(coin_measure("9/10"), iid("9/10", 1), E2)
    assert not (rep.first.governs and rep.second.governs)
    assert rep.outcome == "not-applicable"

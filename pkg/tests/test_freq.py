from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from cournot.cclass import blackbox, trivial_cclass, typicality_cclass
from cournot.errors import BudgetExceeded, SpaceMismatch
from cournot.freq import (
    FreqEventSpec,
    bernoulli_limit_profile,
    definitively_in_oracle,
    definitively_in_typicality,
    freq_event_prob,
    hoeffding_k,
    horizon_ladder,
    materialize_freq_event,
)
from cournot.measure import Interval01, extended_prob

from oracles import binomial_sum, enumerate_prob, freq_tuples
from strategies import DIE3, coin_measure, events, measures

HALF = Fraction(1, 2)


def test_materialize_examples(coin):
    H = coin.event("H")
    assert materialize_freq_event(FreqEventSpec(H, Interval01.closed(1, 1), 2)) == coin.event("HH")
    assert materialize_freq_event(FreqEventSpec(H, Interval01.closed(0, 1), 3)) == coin.full(3)
    got = materialize_freq_event(FreqEventSpec(H, Interval01.upper(HALF), 2))
    assert got == coin.event("HH", "HT", "TH")


def test_materialize_budget(coin):
    with pytest.raises(BudgetExceeded):
        FreqEventSpec(coin.event("H"), Interval01.upper(HALF), 30).materialize(budget=1000)


def test_freq_event_prob_examples():
    assert freq_event_prob(HALF, Interval01.upper(HALF), 3) == HALF
    for k in (1, 7, 40):
        assert freq_event_prob(Fraction(2, 7), Interval01.closed(0, 1), k) == 1
    # 2^10 sequences enumerated by brute force
    assert freq_event_prob(Fraction(9, 10), Interval01.closed(Fraction(4, 5), 1), 10) == \
        Fraction(1162261467, 1250000000)


def test_float_mode_beyond_switchover():
    p, iv = Fraction(3, 5), Interval01.upper(HALF)
    exact = freq_event_prob(p, iv, 300, exact_max_k=None)
    approx = freq_event_prob(p, iv, 300)
    assert isinstance(approx, float)
    assert approx == pytest.approx(float(exact), rel=1e-9)


def test_spec_probability_and_membership(coin):
    spec = FreqEventSpec(coin.event("H"), Interval01.upper(HALF), 4)
    assert spec.level == 4
    assert ("H", "T", "T", "H") in spec
    assert ("H", "T", "T", "T") not in spec
    assert spec.probability(coin_measure("1/2")) == Fraction(11, 16)
    assert extended_prob(coin_measure("1/2"), spec) == Fraction(11, 16)


@given(st.data())
def test_oracle_equivalence(data):
    P = data.draw(measures())
    A = data.draw(events(P.space, max_level=2 if P.space.size == 2 else 1))
    k = data.draw(st.integers(1, 4 if A.level == 1 else 2))
    lo = Fraction(data.draw(st.integers(0, 4)), 4)
    hi = Fraction(data.draw(st.integers(0, 4)), 4)
    if lo > hi:
        lo, hi = hi, lo
    iv = Interval01(lo, hi, data.draw(st.booleans()), data.draw(st.booleans()))
    assume(not iv.is_empty())
    spec = FreqEventSpec(A, iv, k)
    brute = freq_tuples(P.space.size, A.tuples, A.level, k, lambda j, kk: Fraction(j, kk) in iv)
    assert enumerate_prob(P.weights, brute) == freq_event_prob(extended_prob(P, A), iv, k)
    assert spec.materialize().tuples == frozenset(brute)


@given(st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50).filter(bool),
       st.integers(1, 60))
def test_complement(p, sigma, k):
    total = freq_event_prob(p, Interval01.lower(sigma), k) + freq_event_prob(p, Interval01.upper(sigma), k)
    assert total == 1


@given(st.fractions(0, 1, max_denominator=20), st.integers(1, 30))
def test_matches_binomial_oracle(p, k):
    assert freq_event_prob(p, Interval01.upper(HALF), k) == binomial_sum(p, k, lambda j, kk: 2 * j >= kk)


@given(st.fractions(0, 1, max_denominator=8).filter(bool), st.integers(1, 5))
def test_disjoint_intervals_give_disjoint_events(sigma, k):
    A = DIE3.event("a", "b")
    low = FreqEventSpec(A, Interval01.lower(sigma), k).materialize()
    high = FreqEventSpec(A, Interval01.upper(sigma), k).materialize()
    assert low.isdisjoint(high)
    assert (low | high).is_full()


def test_bernoulli_profiles():
    p = Fraction(3, 5)
    up = bernoulli_limit_profile(p, HALF, 1000, "upper", exact_max_k=None)
    assert [k for k, _ in up] == list(range(1, 1001))
    assert up[-1][1] >= Fraction(999, 1000)
    assert bernoulli_limit_profile(p, Fraction(7, 10), 1000, "upper", None)[-1][1] <= Fraction(1, 1000)
    assert bernoulli_limit_profile(p, HALF, 1000, "lower", None)[-1][1] <= Fraction(1, 1000)


def test_hoeffding_k():
    # ln(1000) / (2 * 0.1^2) = 345.39
    assert hoeffding_k(Fraction(1, 10), Fraction(1, 1000)) == 346
    with pytest.raises(ValueError):
        hoeffding_k(0, 0.1)


def test_definitively_in_typicality(coin):
    P, H = coin_measure("3/5"), coin.event("H")
    cert = definitively_in_typicality(P, "9/10", H, HALF)
    assert cert.status == "holds" and cert.method == "analytic"
    # brute-force scan: the tail first stays >= 9/10 from k=40 onward
    assert cert.k0 == 40
    assert cert.justification["k_hoeffding"] == 116
    assert definitively_in_typicality(P, "9/10", H, Fraction(7, 10)).status == "fails"
    assert definitively_in_typicality(P, "9/10", H, Fraction(3, 5)).status == "undecided"
    with pytest.raises(SpaceMismatch):
        definitively_in_typicality(P, "9/10", DIE3.full(1), HALF)


def test_definitively_cert_k0_is_tight():
    p, delta = Fraction(3, 5), Fraction(9, 10)
    tails = [freq_event_prob(p, Interval01.upper(HALF), k) for k in range(1, 120)]
    assert tails[38] < delta
    assert all(t >= delta for t in tails[39:])


def test_horizon_ladder():
    assert horizon_ladder(512) == [128, 256, 512]
    assert horizon_ladder(2, window=3) == [1, 2]
    with pytest.raises(ValueError):
        horizon_ladder(1)


def test_oracle_on_trivial_class(coin):
    T = trivial_cclass(coin)
    H = coin.event("H")
    for iv in (Interval01.upper(HALF), Interval01.closed(Fraction(1, 100), 1), Interval01.closed(1, 1)):
        assert definitively_in_oracle(T, H, iv, 64).status == "fails"
    cert = definitively_in_oracle(T, H, Interval01.closed(0, 1), 64)
    assert cert.holds and cert.method == "finite-horizon" and cert.horizon == 64


@pytest.mark.parametrize("p", ["1/2", "3/5", "9/10"])
@pytest.mark.parametrize("sigma", ["1/5", "2/5", "7/10", "19/20"])
def test_blackbox_agrees_with_analytic(coin, p, sigma):
    P = coin_measure(p)
    C = blackbox(typicality_cclass(P, "9/10"))
    H = coin.event("H")
    analytic = definitively_in_typicality(P, "9/10", H, Fraction(sigma))
    finite = definitively_in_oracle(C, H, Interval01.upper(Fraction(sigma)), 4096)
    assert analytic.holds == finite.holds

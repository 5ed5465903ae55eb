from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cournot.errors import EmptyList, LevelMismatch, NegativeWeight, SpaceMismatch, SumNotOne
from cournot.errors import ThresholdOutOfRange
from cournot.measure import (
    Interval01,
    LeveledEvent,
    SampleSpace,
    Threshold,
    extended_prob,
    make_measure,
    rectangle,
    typicality_contains,
)

from oracles import enumerate_prob
from strategies import COIN, DIE3, coin_measure, events, measures


def test_make_measure_fair_and_biased(coin):
    assert make_measure(coin, ["1/2", "1/2"]).weights == (Fraction(1, 2), Fraction(1, 2))
    assert make_measure(coin, ["3/5", "2/5"]).weight("H") == Fraction(3, 5)


def test_make_measure_rejects_bad_weights(coin):
    with pytest.raises(SumNotOne):
        make_measure(coin, ["1/2", "1/3"])
    with pytest.raises(NegativeWeight):
        make_measure(coin, ["3/2", "-1/2"])


def test_floats_enter_through_their_decimal_repr(coin):
    assert make_measure(coin, [0.9, 0.1]).weights == (Fraction(9, 10), Fraction(1, 10))


def test_sample_space_validation():
    with pytest.raises(ValueError):
        SampleSpace(("H", "H"))
    with pytest.raises(ValueError):
        SampleSpace(())


def test_extended_prob_examples(coin, fair):
    assert extended_prob(fair, coin.event(("H", "H"))) == Fraction(1, 4)
    assert extended_prob(fair, coin.full(2)) == 1
    p = coin_measure("3/5")
    assert extended_prob(p, coin.event("HT", "TH")) == Fraction(12, 25)


def test_extended_prob_space_mismatch(fair):
    with pytest.raises(SpaceMismatch):
        extended_prob(fair, DIE3.full(1))


def test_rectangle_examples(coin):
    H, T = coin.event("H"), coin.event("T")
    assert rectangle([H, T]) == coin.event(("H", "T"))
    assert rectangle([coin.full(1), coin.full(1)]) == coin.full(2)
    assert extended_prob(coin_measure("3/5"), rectangle([H, coin.full(1)])) == Fraction(3, 5)
    with pytest.raises(EmptyList):
        rectangle([])
    with pytest.raises(SpaceMismatch):
        rectangle([H, DIE3.full(1)])


def test_typicality_contains_examples(coin, fair):
    assert typicality_contains(fair, "3/4", coin.full(1))
    assert not typicality_contains(fair, "3/4", coin.event("H"))
    # (9/10)^3 = 729/1000 < 4/5
    assert not typicality_contains(coin_measure("9/10"), "4/5", coin.event("HHH"))


def test_threshold_range():
    for bad in ("1/2", "1", "0", "3/2"):
        with pytest.raises(ThresholdOutOfRange):
            Threshold(Fraction(bad))
    assert Threshold(Fraction(99, 100)).is_near_one(0.02)
    assert not Threshold(Fraction(4, 5)).is_near_one(0.02)


def test_set_operations_and_level_checks(coin):
    a = coin.event("HH", "HT")
    b = coin.event("HT", "TT")
    assert a | b == coin.event("HH", "HT", "TT")
    assert a & b == coin.event("HT")
    assert a - b == coin.event("HH")
    assert ~a == coin.event("TH", "TT")
    assert coin.event("HT") <= a
    assert not a.isdisjoint(b)
    with pytest.raises(LevelMismatch):
        a | coin.event("H")
    with pytest.raises(SpaceMismatch):
        coin.full(1) | DIE3.full(1)


def test_interval_counts():
    assert Interval01.upper(Fraction(1, 2)).count_range(3) == (2, 3)
    assert Interval01.lower(Fraction(1, 2)).count_range(4) == (0, 1)
    assert Interval01.closed(0, 1).count_range(5) == (0, 5)
    assert Interval01.upper(Fraction(1, 2)).isdisjoint(Interval01.lower(Fraction(1, 2)))
    assert not Interval01.closed(0, Fraction(1, 2)).isdisjoint(Interval01.upper(Fraction(1, 2)))


@given(measures(), st.integers(1, 3))
def test_full_and_empty(P, n):
    assert extended_prob(P, P.space.full(n)) == 1
    assert extended_prob(P, P.space.empty(n)) == 0


@given(st.data())
def test_product_rule(data):
    P = data.draw(measures())
    n = data.draw(st.integers(1, 3))
    factors = [data.draw(events(P.space, level=1)) for _ in range(n)]
    expected = Fraction(1)
    for f in factors:
        expected *= extended_prob(P, f)
    assert extended_prob(P, rectangle(factors)) == expected


@given(st.data())
def test_matches_enumeration_oracle(data):
    P = data.draw(measures())
    A = data.draw(events(P.space))
    assert extended_prob(P, A) == enumerate_prob(P.weights, A.tuples)


@given(st.data())
def test_additivity_and_complement(data):
    P = data.draw(measures(COIN))
    A = data.draw(events(COIN, level=2))
    B = data.draw(events(COIN, level=2))
    assert extended_prob(P, A) + extended_prob(P, ~A) == 1
    assert extended_prob(P, A | B) + extended_prob(P, A & B) == (
        extended_prob(P, A) + extended_prob(P, B))


@given(st.integers(0, 15), st.integers(0, 15))
def test_mask_round_trip(m1, m2):
    a = LeveledEvent.from_mask(COIN, 2, m1)
    assert a.to_mask() == m1
    b = LeveledEvent.from_mask(COIN, 2, m2)
    assert (a | b).to_mask() == m1 | m2
    assert a.issubset(b) == (m1 & ~m2 == 0)

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cournot.cclass import (
    blackbox,
    certainty_closure_check,
    check_axioms,
    custom_cclass,
    trivial_cclass,
    typicality_cclass,
    union_lift,
)
from cournot.cmeasure import c_measure
from cournot.errors import SpaceMismatch, ThresholdOutOfRange
from cournot.measure import LeveledEvent, extended_prob

from strategies import COIN, DIE3, coin_measure, events


def test_trivial_membership(coin):
    T = trivial_cclass(coin)
    assert coin.full(2) in T
    assert coin.event("H") not in T
    assert coin.empty(3) not in T


def test_typicality_membership(coin, fair):
    C = typicality_cclass(fair, "3/4")
    assert coin.full(1) in C
    assert coin.event("H") not in C
    assert coin.event("H") in typicality_cclass(coin_measure("9/10"), "4/5")
    with pytest.raises(ThresholdOutOfRange):
        typicality_cclass(fair, "1/2")
    with pytest.raises(SpaceMismatch):
        C.contains(DIE3.full(1))


@given(st.data())
def test_union_lift_semantics(data):
    P = coin_measure("9/10")
    typ = typicality_cclass(P, "4/5")
    A = data.draw(events(COIN))
    assert union_lift(typ, typ).contains(A) == typ.contains(A)
    both = union_lift(trivial_cclass(COIN), typ)
    assert both.contains(A) == (A.is_full() or extended_prob(P, A) >= Fraction(4, 5))


def test_union_of_distinct_typicality_classes_breaks_disjointness(coin):
    C = union_lift(typicality_cclass(coin_measure("1/10"), "4/5"),
                   typicality_cclass(coin_measure("9/10"), "4/5"))
    report = check_axioms(C, 1)
    assert not report.axiom_c.passed
    pair = report.axiom_c.counterexample
    assert pair[0].isdisjoint(pair[1])


def test_axioms_trivial_and_typicality(coin, fair):
    assert check_axioms(trivial_cclass(coin), 2).passed
    report = check_axioms(typicality_cclass(fair, "3/4"), 1)
    assert report.passed and report.method == "enumeration" and report.budget_used == 4


def test_axioms_planted_disjoint_pair(coin, fair):
    half = custom_cclass(coin, lambda A: extended_prob(fair, A) >= Fraction(1, 2))
    report = check_axioms(half, 1)
    assert report.axiom_a.passed and report.axiom_b.passed
    assert not report.axiom_c.passed
    assert set(report.axiom_c.counterexample) == {coin.event("H"), coin.event("T")}


def test_axiom_b_violation_found(coin):
    only_h = custom_cclass(coin, lambda A: A.is_full() or A == coin.event("HH"))
    report = check_axioms(only_h, 2)
    assert not report.axiom_b.passed
    small, big = report.axiom_b.counterexample
    assert small <= big and big not in only_h


def test_axiom_a_violation(coin):
    report = check_axioms(custom_cclass(coin, lambda A: False), 1)
    assert not report.axiom_a.passed


def test_sampling_beyond_enumeration_cutoff(coin, fair):
    report = check_axioms(typicality_cclass(fair, "3/4"), 4, budget=3000)
    assert report.method == "sampling" and report.passed
    half = custom_cclass(coin, lambda A: extended_prob(fair, A) >= Fraction(1, 2))
    assert not check_axioms(half, 4, budget=3000).axiom_c.passed


def test_budget_exhaustion_is_reported(coin, fair):
    report = check_axioms(typicality_cclass(fair, "3/4"), 3, budget=100)
    assert report.budget_exhausted


def test_blackbox_hides_kind(fair):
    C = blackbox(typicality_cclass(fair, "3/4"))
    assert C.kind == "custom"
    assert C.contains(fair.space.full(2))


def _all_events(space, levels):
    return [LeveledEvent.from_mask(space, n, m)
            for n in levels for m in range(1 << space.cardinality(n))]


def test_closure_typicality_has_no_violations():
    P = coin_measure("3/5")
    C = typicality_cclass(P, "3/4")
    report = certainty_closure_check(C, lambda A: extended_prob(P, A), _all_events(COIN, (1, 2)))
    assert report.passed and report.checked == 20


def test_closure_trivial_class(coin):
    T = trivial_cclass(coin)
    report = certainty_closure_check(T, lambda A: c_measure(T, A), _all_events(coin, (1, 2)))
    assert report.infimum == 1 and report.passed


def test_closure_detects_punctured_class():
    P = coin_measure("3/5")
    typ = typicality_cclass(P, "3/4")
    hole = COIN.event("HH", "HT", "TH")  # 21/25, typical
    punctured = custom_cclass(COIN, lambda A: A != hole and typ.contains(A))
    report = certainty_closure_check(punctured, lambda A: extended_prob(P, A),
                                     _all_events(COIN, (1, 2)))
    assert [A for A, _ in report.violations] == [hole]

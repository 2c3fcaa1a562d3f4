"""Tests for the truncated monomial algebra layer."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logdrw.chart import (
    ChartMismatch,
    LogChart,
    MonomialElement,
    enumerate_basis,
    monomial_str,
    vanishes,
)


CH2 = LogChart(2, [["T0", "T1"]])
CH3 = LogChart(3, [["T0", "T1"]], [("u", True), ("x", False)])


def random_element(rng, chart, modulus, bound, nterms=3, degree=None):
    """Random element of the bound-D algebra, with terms drawn from
    degrees <= `degree` (default: the full window)."""
    basis = enumerate_basis(chart, 0, degree if degree is not None else bound, bound)
    terms = {}
    for _ in range(nterms):
        terms[rng.choice(basis)] = rng.randrange(modulus)
    return MonomialElement(chart, modulus, terms, bound)


def test_chart_validation():
    with pytest.raises(ValueError):
        LogChart(4, [["T0", "T1"]])
    with pytest.raises(ValueError):
        LogChart(7, [["T0", "T1"]])  # beyond the desk-scale prime limit
    with pytest.raises(ValueError):
        LogChart(2, [["T0", "T0"]])
    with pytest.raises(ValueError):
        LogChart(2, [[]])


def test_chart_json_roundtrip():
    ch = LogChart.from_json(
        '{"prime": 3, "blocks": [["T0", "T1"]],'
        ' "smooth": [{"name": "u", "laurent": true}, {"name": "x"}]}'
    )
    assert ch == CH3
    with pytest.raises(ValueError):
        LogChart.from_json('{"prime": "2", "blocks": []}')
    with pytest.raises(ValueError):
        LogChart.from_json('{"prime": 2, "blocks": [], "extra": 1}')


def test_vanishing_rule():
    assert vanishes(CH2, (Fraction(1), Fraction(1)))
    assert vanishes(CH2, (Fraction(1, 2), Fraction(3)))
    assert not vanishes(CH2, (Fraction(0), Fraction(5)))
    # product of the block variables is zero
    t0 = MonomialElement.variable(CH2, 2, "T0", 6)
    t1 = MonomialElement.variable(CH2, 2, "T1", 6)
    assert t0.multiply(t1).is_zero()
    # cross terms vanish: (T0 + T1)^2 = T0^2 + T1^2
    s = t0.add(t1)
    sq = s.multiply(s)
    assert sq.coefficient((2, 0)) == 1
    assert sq.coefficient((0, 2)) == 1
    assert len(sq.terms) == 2


def test_one_is_identity():
    rng = random.Random(3)
    for _ in range(20):
        x = random_element(rng, CH3, 9, 4)
        one = MonomialElement.one(CH3, 9, 4)
        assert one.multiply(x) == x


def test_ring_axioms_random():
    rng = random.Random(5)
    for _ in range(30):
        a = random_element(rng, CH2, 4, 8)
        b = random_element(rng, CH2, 4, 8)
        c = random_element(rng, CH2, 4, 8)
        assert a.multiply(b.multiply(c)) == a.multiply(b).multiply(c)
        assert a.multiply(b.add(c)) == a.multiply(b).add(a.multiply(c))
        assert a.multiply(b) == b.multiply(a)


def test_vanishing_is_an_ideal():
    rng = random.Random(7)
    both = MonomialElement.monomial(CH2, 4, (1, 1), 8)
    assert both.is_zero()
    for _ in range(10):
        x = random_element(rng, CH2, 4, 8)
        t0 = MonomialElement.variable(CH2, 4, "T0", 8)
        t1 = MonomialElement.variable(CH2, 4, "T1", 8)
        assert x.multiply(t0).multiply(t1).is_zero()


def test_frobenius():
    t0 = MonomialElement.variable(CH3, 3, "T0", 9)
    f = t0.frobenius()
    assert f.coefficient((3, 0, 0, 0)) == 1
    # multiplicative and additive within the exact window: inputs of
    # degree <= 2 inside a bound-12 algebra, so images (degree <= 6 after
    # exponent tripling) stay clear of truncation
    rng = random.Random(9)
    for _ in range(20):
        a = random_element(rng, CH3, 3, 12, degree=2)
        b = random_element(rng, CH3, 3, 12, degree=2)
        ab = a.multiply(b)
        assert ab.frobenius() == a.frobenius().multiply(b.frobenius())
        assert a.add(b).frobenius() == a.frobenius().add(b.frobenius())
    # over Z/p^2 the coefficients are untouched
    x = MonomialElement.monomial(CH3, 9, (1, 0, 0, 0), 9, coeff=5)
    assert x.frobenius().coefficient((3, 0, 0, 0)) == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_powers_multiply_like_exponents(i, j, k):
    t1 = MonomialElement.variable(CH2, 4, "T1", 12)
    assert t1.power(i).multiply(t1.power(j)).multiply(t1.power(k)) == t1.power(i + j + k)


def test_enumerate_basis_examples():
    got = [monomial_str(CH2, ex) for ex in enumerate_basis(CH2, 0, 2)]
    assert sorted(got) == sorted(["1", "T0", "T1", "T0^2", "T1^2"])
    assert len(got) == 5
    assert [monomial_str(CH2, ex) for ex in enumerate_basis(CH2, 0, 0)] == ["1"]
    # fraction depth 1, degree 1: 2p + 1 monomials
    for p, ch in ((2, CH2), (3, LogChart(3, [["T0", "T1"]]))):
        assert len(enumerate_basis(ch, 1, 1)) == 2 * p + 1
    # deterministic ordering
    assert enumerate_basis(CH3, 0, 3) == enumerate_basis(CH3, 0, 3)


def test_enumerate_basis_laurent_window():
    ch = LogChart(2, [["T0", "T1"]], [("u", True)])
    basis = enumerate_basis(ch, 0, 2, laurent_bound=1)
    exps = {ex for ex in basis}
    assert all(abs(ex[2]) <= 1 for ex in exps)
    assert (Fraction(0), Fraction(0), Fraction(-1)) in exps


def test_chart_mismatch_is_a_fault():
    a = MonomialElement.one(CH2, 2, 4)
    b = MonomialElement.one(CH3, 3, 4)
    with pytest.raises(ChartMismatch):
        a.multiply(b)
    c = MonomialElement.one(CH2, 4, 4)
    with pytest.raises(ChartMismatch):
        a.add(c)


def test_truncation_window_tracking():
    t1 = MonomialElement.variable(CH2, 2, "T1", 3)
    cube = t1.power(3)
    assert cube.coefficient((0, 3)) == 1
    q = cube.multiply(t1)  # degree 4 > bound: discarded
    assert q.is_zero()
    assert q.exact_below <= 3

from fractions import Fraction
from math import isqrt

import pytest
import sympy
from hypothesis import given, strategies as st

from linshadow.core import (Domain, Norm, NormKind, Ordering, SeqVector, format_rational, gauge, norm_compare,
                            parse_rational, sqrt_bounds, vec_combine)
from linshadow.errors import DomainError, ParseError

from conftest import e, rationals, vectors


@pytest.mark.parametrize("text, value", [
    ("3/4", Fraction(3, 4)), ("-2", Fraction(-2)), (" 6/8 ", Fraction(3, 4)), (5, Fraction(5)), ("-1/3", Fraction(-1, 3)),
])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["0.5", "1e3", "1/0", "", "a/b", "1/-2", 0.5, True, None, [1]])
def test_parse_rational_rejects(bad):
    with pytest.raises(ParseError):
        parse_rational(bad)


@given(rationals(10**6, 10**6))
def test_format_parse_roundtrip(q):
    s = format_rational(q)
    assert "/" in s
    assert parse_rational(s) == q


def test_seqvector_drops_zeros_and_sorts():
    v = SeqVector({3: Fraction(1, 2), 0: 0, 1: "-2/5"})
    assert v.support == (1, 3)
    assert v[1] == Fraction(-2, 5) and v[0] == 0 and v[99] == 0
    assert v.to_text() == "{1:-2/5, 3:1/2}"
    assert SeqVector.zero().is_zero() and not SeqVector.zero()


def test_seqvector_domains():
    with pytest.raises(DomainError):
        SeqVector({-1: 1})
    z = SeqVector({-1: 1}, Domain.INTEGERS)
    assert z[-1] == 1
    with pytest.raises(DomainError):
        z + SeqVector({0: 1})


@given(vectors(), vectors(), rationals())
def test_vector_space_laws(v, w, a):
    assert v + w == w + v
    assert (v + w) * a == v * a + w * a
    assert v - v == SeqVector.zero()
    assert vec_combine(a, v, 1, w) == v * a + w
    assert hash(v + w) == hash(w + v)


@given(vectors())
def test_text_roundtrip(v):
    assert SeqVector.parse(v.to_text()) == v


@pytest.mark.parametrize("bad", ["0:1", "{0:0.5}", "{x:1}", "{0:1, 0:2}", "{0 1}"])
def test_vector_parse_rejects(bad):
    with pytest.raises(ParseError):
        SeqVector.parse(bad)


def test_gauges_by_hand():
    v = SeqVector({0: Fraction(3, 5), 1: Fraction(-4, 5)})
    assert gauge(v, NormKind.ONE) == Fraction(7, 5)
    assert gauge(v, NormKind.INF) == Fraction(4, 5)
    assert gauge(v, NormKind.TWO) == 1  # squared
    assert norm_compare(v, 1, NormKind.TWO) is Ordering.EQUAL
    assert norm_compare(v, Fraction(7, 5), NormKind.ONE) is Ordering.EQUAL
    assert norm_compare(v, Fraction(1, 2), NormKind.INF) is Ordering.GREATER


@given(st.fractions(min_value=0, max_value=10**6, max_denominator=10**6))
def test_sqrt_bounds_bracket(q):
    lo, hi = sqrt_bounds(q)
    assert lo * lo <= q <= hi * hi
    assert hi - lo <= Fraction(1, 2 ** 63)
    root = sympy.sqrt(sympy.Rational(q.numerator, q.denominator))
    assert sympy.Rational(lo.numerator, lo.denominator) <= root <= sympy.Rational(hi.numerator, hi.denominator)


def test_sqrt_bounds_exact_square():
    assert sqrt_bounds(Fraction(9, 4)) == (Fraction(3, 2), Fraction(3, 2))


@given(vectors(), vectors(), st.sampled_from(list(NormKind)))
def test_triangle_inequality(v, w, kind):
    n = Norm(kind)
    assert n.lower(v + w) <= n.upper(v) + n.upper(w)


@given(vectors(), rationals(nonzero=True), st.sampled_from(list(NormKind)))
def test_homogeneity(v, a, kind):
    n = Norm(kind)
    if kind is NormKind.TWO:
        assert n.gauge(v * a) == a * a * n.gauge(v)
    else:
        assert n.gauge(v * a) == abs(a) * n.gauge(v)


@given(vectors(), rationals(max_num=5, nonzero=True).map(abs), st.sampled_from(list(NormKind)))
def test_min_steps_brute_force(v, bound, kind):
    n = Norm(kind)
    k = n.min_steps(v, bound)
    assert k >= 1
    assert n.lt(v / k, bound)
    if k > 1:
        assert not n.lt(v / (k - 1), bound)


def test_min_steps_two_norm_oracle():
    # ||(3,4)||_2 = 5; 5/k < 1/3 first at k = 16
    v = SeqVector({0: 3, 1: 4})
    assert Norm(NormKind.TWO).min_steps(v, Fraction(1, 3)) == 16
    # isqrt oracle for an irrational norm: ||(1,1)|| = sqrt 2, sqrt2/k < 1/10 iff k > 10 sqrt 2 = 14.14...
    assert Norm(NormKind.TWO).min_steps(SeqVector({0: 1, 1: 1}), Fraction(1, 10)) == isqrt(200) + 1


def test_split_norm_is_max_over_blocks():
    n = Norm(NormKind.ONE, split=lambda v: [v.restrict(lambda i: i < 2), v.restrict(lambda i: i >= 2)])
    v = SeqVector({0: 1, 1: 1, 2: 3})
    assert n.gauge(v) == 3
    assert n.lt(v, Fraction(31, 10)) and not n.lt(v, 3) and n.le(v, 3)


def test_norm_kind_parse():
    assert NormKind.parse("inf") is NormKind.INF
    assert NormKind.parse(2) is NormKind.TWO
    with pytest.raises(ParseError):
        NormKind.parse("3")


def test_basis_and_from_list():
    assert SeqVector.from_list([0, 1, "1/2"]) == e(1) + e(2, Fraction(1, 2))
    assert SeqVector.basis(4).max_index() == 4

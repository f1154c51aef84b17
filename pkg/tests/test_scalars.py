from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from hkr_retract.scalars import (
    Polynomial,
    poly_eval,
    poly_mul,
    poly_partial,
    random_polynomial,
    rational,
    scalar_from_json,
    scalar_to_json,
)

from helpers import points, polynomials, small_fractions

x1 = Polynomial.variable(2, 1)
x2 = Polynomial.variable(2, 2)


def to_sympy(p: Polynomial):
    xs = sympy.symbols(f"x1:{p.n + 1}")
    return sum((sympy.Rational(c.numerator, c.denominator) * sympy.prod([x ** k for x, k in zip(xs, e)])
                for e, c in p.terms.items()), sympy.Integer(0)), xs


def test_products():
    one = Polynomial.one(2)
    assert (x1 + 1) * (x1 - 1) == x1 ** 2 - 1
    assert x1 * x2 * one == x1 * x2
    assert poly_mul(x1 * x2, x2) == Polynomial.monomial((1, 2))


def test_partials():
    assert poly_partial(x1 ** 2 * x2, 1) == 2 * x1 * x2
    assert poly_partial(x1 ** 2, 2) == Polynomial.zero(2)
    with pytest.raises(IndexError):
        x1.partial(3)


def test_evaluation():
    assert poly_eval(Polynomial.variable(1, 1) ** 2, [3]) == 9
    assert poly_eval(Polynomial.constant(3, 5), [7, -1, Fraction(1, 2)]) == 5
    assert poly_eval(x1 + x2, [Fraction(1, 2), Fraction(1, 3)]) == Fraction(5, 6)
    with pytest.raises(ValueError):
        x1.evaluate([1])


def test_rational_parsing_and_json():
    assert rational("3/4") == Fraction(3, 4)
    assert rational(2) == Fraction(2)
    assert scalar_from_json(scalar_to_json(Fraction(-7, 3))) == Fraction(-7, 3)
    p = x1 ** 3 * Fraction(1, 3) - x2 + 2
    assert Polynomial.from_json(p.to_json()) == p


def test_constructor_rejects_bad_exponents():
    with pytest.raises(ValueError):
        Polynomial(2, {(1,): 1})
    with pytest.raises(ValueError):
        Polynomial(1, {(-1,): 1})
    with pytest.raises(ValueError):
        Polynomial(0)


def test_reindex_and_restrict():
    p = x1 ** 2 * x2 + 3
    assert p.reindex(2, [2, 1]) == x2 ** 2 * x1 + 3
    assert p.reindex(3, [1, 3]) == Polynomial.monomial((2, 0, 1)) + 3
    assert p.restrict([1]) == Polynomial.constant(1, 3)


@given(polynomials(2), polynomials(2), polynomials(2))
def test_polynomial_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a and a + b == b + a
    assert a - a == Polynomial.zero(2)


@given(small_fractions, small_fractions, small_fractions)
def test_rational_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(polynomials(2), polynomials(2), st.sampled_from([1, 2]))
def test_leibniz_rule(a, b, i):
    assert (a * b).partial(i) == a.partial(i) * b + a * b.partial(i)


@given(polynomials(3))
def test_partials_commute(p):
    assert p.partial(1).partial(2) == p.partial(2).partial(1)
    assert p.partial(3).partial(1) == p.partial(1).partial(3)


@given(polynomials(2), polynomials(2), points(2))
def test_evaluation_is_a_ring_morphism(a, b, pt):
    assert (a * b).evaluate(pt) == a.evaluate(pt) * b.evaluate(pt)
    assert (a + b).evaluate(pt) == a.evaluate(pt) + b.evaluate(pt)


@given(polynomials(2), polynomials(2), points(2))
def test_against_sympy(a, b, pt):
    ea, xs = to_sympy(a)
    eb, _ = to_sympy(b)
    prod, _ = to_sympy(a * b)
    assert sympy.expand(ea * eb - prod) == 0
    d, _ = to_sympy(a.partial(2))
    assert sympy.expand(sympy.diff(ea, xs[1]) - d) == 0
    subs = {x: sympy.Rational(v.numerator, v.denominator) for x, v in zip(xs, pt)}
    val = ea.subs(subs)
    assert Fraction(int(val.p), int(val.q)) == a.evaluate(pt)


def test_random_polynomial_is_reproducible():
    import random

    p = random_polynomial(random.Random(7), 3, 3, 5)
    q = random_polynomial(random.Random(7), 3, 3, 5)
    assert p == q and p.degree() <= 3

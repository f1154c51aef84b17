from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from hkr_retract.graded_algebra import EXT, Element
from hkr_retract.hkr_model import (
    FlatModel,
    Symbol,
    cup_symbols,
    decompose,
    delta_symbol,
    diagonal_derivation,
    equivariance_reports,
    hkr,
    hkr_inverse,
    hochschild_delta_eval,
    in_ideal_power,
    insert,
    lie_derivative_symbol,
    model_instantiate,
    multivector,
    op_apply,
    op_closure,
    permutation_action,
    sym_derivative,
    symbol,
    tangential_check,
    theta_nabla,
    unit_symbol,
)
from hkr_retract.scalars import Polynomial

from conftest import assert_reports
from helpers import polynomials, tensor_words

X1, X2 = sympy.symbols("x1 x2")
XS = (X1, X2)


def to_sympy(p: Polynomial):
    out = 0
    for e, c in p.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for x, k in zip(XS, e):
            term *= x ** k
        out += term
    return sympy.expand(out)


def op_oracle(s: Symbol, args) -> sympy.Expr:
    """``Op(X)(f_1..f_k) = Π_i ∂^{X_i} f_i``, written directly with sympy derivatives."""
    total = 0
    for X, c in s.terms.items():
        term = to_sympy(c)
        for w, f in zip(X, args):
            g = to_sympy(f)
            for letter in w:
                g = sympy.diff(g, XS[letter - 1])
            term *= g
        total += term
    return sympy.expand(total)


def var(n, i):
    return Polynomial.variable(n, i)


M2 = FlatModel(2)


# -- symmetrized derivatives ------------------------------------------------------


def test_sym_derivative_examples():
    f = var(2, 1) ** 2
    assert sym_derivative(f, 1)(1) == 2 * var(2, 1)
    assert sym_derivative(f, 1)(2) == Polynomial.zero(2)
    assert sym_derivative(f, 2)(1, 1) == Polynomial.constant(2, 4)
    assert not sym_derivative(f, 3).values


@given(polynomials(2, 3, 3), polynomials(2, 3, 3))
def test_second_derivative_of_a_product(f, g):
    """``D²(fg) = D²f·g + 2 Df⊙Dg + f·D²g`` with ``(a⊙b)(i,j) = a_i b_j + a_j b_i``."""
    d2fg, d2f, d2g = sym_derivative(f * g, 2), sym_derivative(f, 2), sym_derivative(g, 2)
    df, dg = sym_derivative(f, 1), sym_derivative(g, 1)
    for i in (1, 2):
        for j in (1, 2):
            sym_prod = df(i) * dg(j) + df(j) * dg(i)
            assert d2fg(i, j) == d2f(i, j) * g + sym_prod * 2 + f * d2g(i, j)


def test_insertion_examples():
    f = var(2, 1) ** 2 * var(2, 2)
    d2 = sym_derivative(f, 2)
    partial = insert((1,), d2)
    assert partial.degree == 1 and partial(2) == d2(1, 2)
    assert insert((1, 2), d2) == d2(1, 2)
    assert insert((1, 1, 2), d2) == Polynomial.zero(2)
    assert insert((var(2, 2), (1, 1)), d2) == d2(1, 1) * var(2, 2)
    with pytest.raises(ValueError):
        insert(((1,),), (d2,))


# -- operators of symbols ---------------------------------------------------------


def test_op_examples():
    x1, x2 = var(2, 1), var(2, 2)
    assert op_apply(symbol(M2, (1,)), [x1 ** 2]) == 2 * x1
    assert op_apply(symbol(M2, (1, 1)), [x1 ** 2]) == Polynomial.constant(2, 2)
    assert op_apply(symbol(M2, (1,), (2,)), [x1, x2]) == Polynomial.one(2)
    assert op_apply(unit_symbol(M2, 2), [x1, x2]) == x1 * x2
    with pytest.raises(ValueError):
        op_apply(symbol(M2, (1,)), [x1, x2])


@given(tensor_words(2, 2, 2), polynomials(2, 3, 3), polynomials(2, 3, 3), polynomials(2, 1, 2))
def test_op_matches_sympy_oracle(X, f, g, c):
    s = Symbol.word(M2, X, c)
    args = [f, g][: len(X)]
    assert to_sympy(op_apply(s, args)) == op_oracle(s, args)


@given(tensor_words(2, 2, 2), tensor_words(2, 1, 2), polynomials(2, 2, 3), polynomials(2, 2, 3),
       polynomials(2, 2, 3))
def test_cup_is_concatenation(X, Y, f, g, h):
    a, b = Symbol.word(M2, X), Symbol.word(M2, Y)
    args = [f, g, h][: len(X) + len(Y)]
    lhs = op_apply(cup_symbols(a, b), args)
    assert lhs == op_apply(a, args[: len(X)]) * op_apply(b, args[len(X):])


@given(tensor_words(2, 2, 2), polynomials(2, 1, 2), st.lists(polynomials(2, 3, 3), min_size=3, max_size=3))
def test_key_identity_op_intertwines_differentials(X, c, fs):
    """``Op(δ_ca s) = δ_Hoch Op(s)``, evaluated on polynomial arguments."""
    s = Symbol.word(M2, X, c)
    k = len(X)
    args = fs[: k + 1]
    lhs = op_apply(delta_symbol(s), args)
    rhs = hochschild_delta_eval(op_closure(s), k, args) if k else (args[0] * op_apply(s, []) -
                                                                  op_apply(s, []) * args[0])
    assert lhs == rhs


def test_delta_of_zero_cochain_and_closed_cochains():
    x1, x2 = var(2, 1), var(2, 2)
    g = x1 * x2 + 3
    assert hochschild_delta_eval(None, 0, [x1 + x2 ** 2], zero_cochain=g) == Polynomial.zero(2)
    field = lie_derivative_symbol(M2, {1: x2, 2: x1 ** 2})
    assert not delta_symbol(field)
    assert not delta_symbol(unit_symbol(M2, 2))
    # δ of the multiplication, as a cochain, also vanishes by evaluation
    mu = op_closure(unit_symbol(M2, 2))
    assert hochschild_delta_eval(mu, 2, [x1, x2, x1 + 1]) == Polynomial.zero(2)


def test_linearity_of_op():
    a, b = symbol(M2, (1,), coef=var(2, 2)), symbol(M2, (2, 2), coef=3)
    f = var(2, 1) ** 2 * var(2, 2) ** 2
    assert op_apply(a + b, [f]) == op_apply(a, [f]) + op_apply(b, [f])
    assert op_apply(a.scale(Fraction(2, 3)), [f]) == op_apply(a, [f]) * Fraction(2, 3)


# -- HKR ---------------------------------------------------------------------------


def test_hkr_examples():
    x1, x2 = var(2, 1), var(2, 2)
    assert op_apply(hkr(M2, multivector(M2, {(1,): 1})), [x1 ** 2]) == 2 * x1
    assert op_apply(hkr(M2, multivector(M2, {(1, 2): 1})), [x1, x2]) == Polynomial.constant(2, Fraction(1, 2))
    unit = hkr(M2, multivector(M2, {(): 1}))
    assert op_apply(unit, []) == Polynomial.one(2)


def test_hkr_inverse_and_theta_examples():
    field = lie_derivative_symbol(M2, {1: var(2, 2)})
    assert hkr_inverse(field) == multivector(M2, {(1,): var(2, 2)})
    mu = unit_symbol(M2, 2)
    assert not hkr_inverse(mu)
    assert theta_nabla(mu) == unit_symbol(M2, 1)
    assert not theta_nabla(field)


@given(tensor_words(2, 3, 2), polynomials(2, 1, 2))
def test_decomposition_certificate(X, c):
    d = decompose(Symbol.word(M2, X, c))
    assert d.exact_residual
    assert hkr_inverse(d.class_symbol) == d.class_multivector


def test_class_of_antisymmetrized_cup():
    a = symbol(M2, (1,), (2,)) - symbol(M2, (2,), (1,))
    d = decompose(a)
    assert d.closed and d.exact_residual
    assert d.class_multivector == multivector(M2, {(1, 2): 2})
    assert d.class_symbol == a


@given(st.lists(st.tuples(st.sampled_from([(), (1,), (2,), (1, 2)]), polynomials(2, 2, 2)), max_size=3))
def test_hkr_inverse_is_a_left_inverse(parts):
    xi = Element(EXT, {})
    for w, c in parts:
        xi = xi + multivector(M2, {w: c})
    assert hkr_inverse(hkr(M2, xi)) == xi


# -- variants --------------------------------------------------------------------


def test_bundle_variant_intertwines_differentials():
    m = FlatModel(2, rE=1, rF=2)
    x1, x2 = var(2, 1), var(2, 2)
    s = Symbol.word(m, (((1,),), ((2,), 2)), x1, variant="bundle")
    args = [x1 ** 2 * x2, x2 ** 2 + x1]
    section = [x1 * x2 ** 2]
    lhs = op_apply(delta_symbol(s), args, section)
    rhs = hochschild_delta_eval(op_closure(s), 1, args, m, "bundle", section)
    assert lhs == rhs


def test_fiber_variant_and_pull_back():
    m = FlatModel(3, fiber=1)
    f = Polynomial(2, {(2, 1): 1, (0, 3): 2})
    pulled = m.pull_back(f)
    for r in (1, 2):
        base, up = sym_derivative(f, r), sym_derivative(pulled, r)
        for w, v in up.values.items():
            assert 3 not in w  # pull-backs have no vertical derivatives
            assert v == m.pull_back(base(*w))
    s = Symbol.word(m, (((1,),), (3,)), 1, variant="fiber")
    g = Polynomial.variable(3, 3) ** 2
    assert op_apply(s, [f], g) == m.pull_back(f.partial(1)) * 2 * Polynomial.variable(3, 3)
    lhs = op_apply(delta_symbol(s), [f, Polynomial.variable(2, 1)], g)
    rhs = hochschild_delta_eval(op_closure(s), 1, [f, Polynomial.variable(2, 1)], m, "fiber", g)
    assert lhs == rhs


# -- tangential operators ---------------------------------------------------------


def test_tangential_examples():
    m = FlatModel(2, tangent=1)
    assert tangential_check(symbol(m, (1,))).tangential
    bad = tangential_check(symbol(m, (2,)))
    assert not bad.tangential and bad.label == ((2,),)
    assert Polynomial.from_json(bad.witness["value"]) == Polynomial.one(2)
    assert tangential_check(symbol(m, (2,), coef=var(2, 2))).tangential
    assert tangential_check(symbol(m, (2, 2), coef=var(2, 2) ** 2)).tangential
    assert not tangential_check(symbol(m, (2, 2), coef=var(2, 2))).tangential


def test_ideal_power_membership():
    x1, x2 = var(2, 1), var(2, 2)
    assert in_ideal_power(x1 * x2 ** 2, (2,), 2)
    assert not in_ideal_power(x1 * x2 + x2 ** 2, (2,), 2)
    assert in_ideal_power(x1, (2,), 0)


# -- instantiations and symmetry --------------------------------------------------


@pytest.mark.parametrize("kind,kw", [
    ("scalar", {"n": 2}),
    ("bundle", {"n": 1, "rE": 1, "rF": 2}),
    ("submanifold", {"n": 2, "m": 1}),
    ("submersion", {"n_base": 1, "n_fiber": 1}),
    ("foliation", {"n": 2, "leaf": 1}),
    ("invariant", {"n": 2, "perms": [(2, 1)]}),
])
def test_model_instances(kind, kw):
    inst = model_instantiate(kind, k_max=2, s_max=1, l_max=2, poly_deg=1, **kw)
    assert inst.kind == kind
    assert_reports(inst.verify())


def test_unknown_model_kind():
    with pytest.raises(ValueError):
        model_instantiate("orbifold")


def test_equivariance():
    x1, x2 = var(2, 1), var(2, 2)
    symbols = [symbol(M2, (1,), (2,), coef=x1), symbol(M2, (1, 2), coef=x2 ** 2), unit_symbol(M2, 2),
               lie_derivative_symbol(M2, {1: x2, 2: x1})]
    fields = [multivector(M2, {(1, 2): x1 * x2}), multivector(M2, {(1,): x2})]
    reps = equivariance_reports(M2, permutation_action(M2, (2, 1)), symbols, fields)
    reps += equivariance_reports(M2, diagonal_derivation(M2, (1, 2)), symbols, fields)
    assert_reports(reps)

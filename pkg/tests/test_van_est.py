from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hkr_retract.ca_complex import antipode_twist, delta_ca_word, delta_M_label, make_comodule
from hkr_retract.ce_complex import partial_M_label
from hkr_retract.graded_algebra import EXT, TENSOR, Element, ext, ext_basis_upto, ext_mul, tensor, tensor_basis_upto
from hkr_retract.homotopy import check_complex, check_identity, verify_retract
from hkr_retract.van_est import (
    VE_GRADING,
    MorphismAlong,
    VanEst,
    VeWord,
    Window,
    delta_k_power_closed,
    delta_vE_label,
    h_label,
    k_label,
    kB_power_j_closed,
    left_action,
    partial_h_power_closed,
    partial_vE_label,
    plain,
    restricted_retract_reports,
    right_action,
    check_equivariance,
    invariant_subcomplex,
    theta,
    van_est,
    van_est_coeff_closed,
    van_est_inverse,
)

from conftest import assert_reports
from helpers import tensor_words

SMALL = Window(k_max=2, s_max=2, r_max=2, l_max=2)


def _power(op, terms, n):
    for _ in range(n):
        terms = op.apply_dict(terms)
    return {k: v for k, v in terms.items() if v}


@pytest.fixture(scope="module")
def ve2():
    return VanEst(2, window=Window(k_max=3, s_max=2, r_max=3, l_max=2))


# -- the double complex ------------------------------------------------------


def test_differential_examples():
    assert delta_vE_label(((), (), None, (1, 2))) == {}
    assert delta_vE_label(((), (1,), None, ())) == {(((1,),), (), None, ()): -1}
    assert partial_vE_label((((1,),), (), None, ())) == {}
    assert partial_vE_label(((), (1,), None, ())) == {((), (), None, (1,)): 1}


def test_contraction_examples():
    assert h_label((((1,),), (), None, ())) == {((), (1,), None, ()): -1}
    assert k_label(((), (), None, (1,))) == {((), (1,), None, ()): 1}
    assert k_label(((), (), None, ())) == {}


def test_double_complex_relations(ve2):
    labels = ve2.ve_labels()
    d, p = ve2.delta, ve2.partial
    assert_reports([
        check_complex(ve2.total_complex, labels),
        check_identity("δ² = 0", labels, lambda lab: _power(d, {lab: 1}, 2), lambda lab: {}),
        check_identity("∂² = 0", labels, lambda lab: _power(p, {lab: 1}, 2), lambda lab: {}),
    ])


def test_augmentations(ve2):
    # the column homotopy satisfies the homotopy relation but not the side conditions
    col = verify_retract(ve2.column_retract, ve2.ve_labels(), require=("deformation",))
    assert not col.is_special
    row = verify_retract(ve2.row_retract, ve2.ve_labels(), require=("special",))
    assert_reports(col.reports + row.reports)
    assert all(not ve2.delta.apply_dict(ve2.i.on_label(xi)) for xi in ext_basis_upto(2, 2))
    assert all(not ve2.partial.apply_dict(ve2.j.on_label(X)) for X in tensor_basis_upto(2, 2, 2))


def test_perturbed_retracts(ve2):
    labels = ve2.ve_labels()
    col, row = ve2.perturbed_column, ve2.perturbed_row
    rc = verify_retract(col, labels, require=("deformation",))
    rr = verify_retract(row, labels, require=("special",))
    assert_reports(rc.reports + rr.reports)
    # the perturbed small differential on Λ V vanishes
    assert all(not col.small.d.on_label(xi) for xi in ext_basis_upto(2, 2))
    H, K, P = col.h, row.h, col.p
    assert_reports([
        check_identity("H K = 0", labels, lambda lab: H.apply_dict(K.on_label(lab)), lambda lab: {}),
        check_identity("P K = 0", labels, lambda lab: P.apply_dict(K.on_label(lab)), lambda lab: {}),
    ])


def test_closed_forms(ve2):
    dh = ve2.partial @ ve2.h
    for X in tensor_basis_upto(2, 3, 2):
        for n in range(1, len(X) + 1):
            assert _power(dh, {(X, (), None, ()): 1}, n) == partial_h_power_closed(X, n), (X, n)
    dk = ve2.delta @ ve2.k
    for xi in ext_basis_upto(2, 2):
        series = {(((), (), None, xi)): 1}
        for n in range(len(xi) + 2):
            got = _power(dk, series, n)
            if n <= len(xi):
                assert got == delta_k_power_closed(xi, n), (xi, n)
            else:
                assert not got  # the series stops after ℓ + 1 terms


def test_van_est_map_examples():
    assert van_est(tensor((1,), (2,))) == ext(1, 2)
    assert not van_est(tensor((1, 2)))
    assert not van_est(tensor((), (1,)))
    assert van_est_inverse(Element(EXT, {(): 1})) == Element(TENSOR, {(): 1})
    assert van_est_inverse(ext(1)) == tensor((1,))
    half = Fraction(1, 2)
    assert van_est_inverse(ext(1, 2)) == tensor((1,), (2,), coef=half) - tensor((2,), (1,), coef=half)


def test_theta_examples():
    assert not theta(tensor((1,)))
    assert theta(tensor(())) == Element(TENSOR, {(): -1})
    ve = plain(1)
    unit = {((),): 1}
    lhs = ve.ca_complex().d.apply_dict(ve.Theta.apply_dict(unit))
    for k, v in ve.Theta.apply_dict(ve.ca_complex().d.apply_dict(unit)).items():
        lhs[k] = lhs.get(k, 0) + v
    assert {k: v for k, v in lhs.items() if v} == unit


def test_fast_and_composite_maps_agree(ve2):
    words = ve2.ca_labels()
    assert_reports([
        check_identity("VE = P j", words, ve2.VE.on_label, ve2.VE_composite.on_label),
        check_identity("Θ = Q H j", words, ve2.Theta.on_label, ve2.Theta_composite.on_label),
        check_identity("Q recursive = Q", ve2.ve_labels()[:400], ve2.Q_recursive.on_label,
                       ve2.perturbed_row.p.on_label),
    ])


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_van_est_retract(dim):
    ve = VanEst(dim, window=Window(k_max=3, s_max=2, r_max=3, l_max=dim))
    assert_reports(verify_retract(ve.retract, require=("deformation",)).reports)


@given(tensor_words(3, 2, 2), tensor_words(3, 2, 2))
def test_van_est_is_multiplicative(X, Y):
    x, y = Element(TENSOR, {X: 1}), Element(TENSOR, {Y: 1})
    assert van_est(Element(TENSOR, {X + Y: 1})) == ext_mul(van_est(x), van_est(y))


def test_ve_word_json():
    w = VeWord(((1,), ()), (2,), None, (1, 3))
    assert VeWord.from_json(w.to_json()) == w
    assert w == (w.tensor, w.sym, w.coef, w.ext) and w.bidegree == (2, 2)
    with pytest.raises(ValueError):
        VeWord.from_json({"tensor": []})


# -- module structures --------------------------------------------------------


@given(tensor_words(2, 1, 2), tensor_words(2, 2, 1), st.sampled_from(ext_basis_upto(2, 2)),
       st.sampled_from(ext_basis_upto(2, 2)), st.sampled_from([(), (1,), (1, 2)]))
def test_bimodule_structure(Y, X, xi, eta, phi):
    x = Element(VE_GRADING, {(X, phi, None, xi): 1})
    y = Element(TENSOR, {Y: 1})
    e = Element(EXT, {eta: 1})
    # the two actions commute
    assert left_action(y, right_action(x, e)) == right_action(left_action(y, x), e)
    # δ is a derivation for the left action, ∂ is linear for the right action up to the Koszul sign
    d = lambda z: z.map_labels(delta_vE_label, VE_GRADING)
    p = lambda z: z.map_labels(partial_vE_label, VE_GRADING)
    sign_y = -1 if len(Y) % 2 else 1
    dy = Element(TENSOR, dict(_flat(delta_ca_word(Y))))
    assert d(left_action(y, x)) == left_action(dy, x) + left_action(y, d(x)).scale(sign_y)
    assert p(right_action(x, e)) == right_action(p(x), e)
    assert p(left_action(y, x)) == left_action(y, p(x)).scale(sign_y)


def _flat(terms):
    return {k: v for k, v in terms.items() if v}


@given(tensor_words(2, 1, 2), tensor_words(2, 2, 2))
def test_j_is_a_left_module_map_and_i_a_right_module_map(Y, X):
    ve = plain(2)
    y = Element(TENSOR, {Y: 1})
    jx = Element(VE_GRADING, dict(ve.j.on_label(X)))
    assert left_action(y, jx) == Element(VE_GRADING, dict(ve.j.on_label(Y + X)))
    for xi in ext_basis_upto(2, 2):
        for eta in ext_basis_upto(2, 2):
            prod = ext_mul(Element(EXT, {xi: 1}), Element(EXT, {eta: 1}))
            lhs = Element(VE_GRADING, ve.i.apply_dict(prod.terms))
            rhs = right_action(Element(VE_GRADING, dict(ve.i.on_label(xi))), Element(EXT, {eta: 1}))
            assert lhs == rhs


# -- coefficients -------------------------------------------------------------


COMODULES = [
    ("trivial", {"module_rank": 2}),
    ("regular", {"degree": 2}),
    ("split", {"degree": 2, "perp_rank": 1}),
    ("submodule", {"degree": 2, "inclusion": [2]}),
]


@pytest.mark.parametrize("kind,kw", COMODULES)
def test_coefficient_perturbation(kind, kw):
    c = make_comodule(kind, 2, **kw)
    ve = VanEst(2, c, SMALL)
    labels, small = ve.ve_labels(), ve.ce_labels()
    H, B, i = ve.perturbed_column.h, ve.B, ve.perturbed_column.i
    BH = B @ H
    twisted = antipode_twist(c)
    lc = ve.lie_coaction
    assert_reports([
        check_complex(ve._ve_complex(ve.D, "D+B"), labels),
        check_identity("H B i = 0", small, lambda lab: H.apply_dict(B.apply_dict(i.on_label(lab))),
                       lambda lab: {}),
        check_identity("(BH)² = 0", labels, lambda lab: _power(BH, {lab: 1}, 2), lambda lab: {}),
        check_identity("column side: induced differential is ∂_M", small, ve.coeff_column.small.d.on_label,
                       lambda lab: partial_M_label(lab, lc)),
        check_identity("row side: induced differential is δ of M^s", ve.ca_labels(), ve.coeff_row.small.d.on_label,
                       lambda lab: delta_M_label(lab, twisted)),
        check_identity("VE_M all-slots formula", ve.ca_labels(), ve.VE.on_label,
                       lambda lab: van_est_coeff_closed(lab[0], lab[1], c)),
    ])
    rep = verify_retract(ve.retract, require=("deformation",))
    assert_reports(rep.reports)
    kB = ve.k @ B
    for X in tensor_basis_upto(2, 2, 2):
        for m in c.basis:
            for n in range(1, 3):
                got = _power(kB, {(X, (), m, ()): 1}, n)
                assert got == kB_power_j_closed(X, m, n, c), (X, m, n)


def test_untwisted_coefficients_differ_for_the_regular_comodule():
    """Only the antipode-twisted comodule makes the row perturbation close up."""
    c = make_comodule("regular", 2, degree=2)
    ve = VanEst(2, c, SMALL)
    rep = check_identity("row side vs untwisted δ_M", ve.ca_labels(), ve.coeff_row.small.d.on_label,
                         lambda lab: delta_M_label(lab, c))
    assert not rep.ok


def test_trivial_coefficients_reduce_to_plain():
    c = make_comodule("trivial", 2, module_rank=2)
    ve = VanEst(2, c, SMALL)
    flat = plain(2)
    for X in tensor_basis_upto(2, 2, 2):
        for m in (1, 2):
            assert dict(ve.VE.on_label((X, m))) == {(m, w): v for w, v in flat.VE.on_label(X).items()}
            assert dict(ve.Theta.on_label((X, m))) == {(Y, m): v for Y, v in flat.Theta.on_label(X).items()}


# -- equivariance ---------------------------------------------------------------


def test_permutation_and_scaling_equivariance():
    ve = VanEst(3, window=Window(k_max=2, s_max=2, r_max=2, l_max=3))
    words = list(tensor_basis_upto(3, 3, 2))
    exts = ext_basis_upto(3, 3)
    perm = MorphismAlong.permutation([2, 3, 1])
    scale = MorphismAlong.from_matrix([[2, 0, 0], [0, 2, 0], [0, 0, 2]])
    deriv = MorphismAlong({1: {1: 1}, 2: {2: 1}, 3: {3: 1}}, mode="derivation")
    reps = []
    for a in (perm, scale, deriv):
        reps += [
            check_equivariance(a, ve.VE, words, TENSOR, EXT),
            check_equivariance(a, ve.VE_inv, exts, EXT, TENSOR),
            check_equivariance(a, ve.Theta, words, TENSOR, TENSOR),
        ]
    assert_reports(reps)


def test_invariant_subcomplexes():
    ve = VanEst(2, window=SMALL)
    ce = ve.ce_labels()
    assert len(invariant_subcomplex([], ce, EXT)) == len(ce)
    sign = MorphismAlong({1: {1: -1}})
    inv = invariant_subcomplex([sign], ce, EXT)
    assert sorted(tuple(e.terms) for e in inv) == [((),), ((2,),)]
    swap = MorphismAlong.permutation([2, 1])
    top = invariant_subcomplex([swap], [(1, 2)], EXT)
    assert top == []
    out = restricted_retract_reports(ve, [sign])
    assert_reports(out["reports"])
    with pytest.raises(ValueError):
        MorphismAlong({}, mode="bogus")

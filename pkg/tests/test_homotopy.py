from fractions import Fraction

import pytest

from hkr_retract.ca_complex import ca_complex
from hkr_retract.ce_complex import poincare_retract, split_retract
from hkr_retract.graded_algebra import Element
from hkr_retract.homotopy import (
    Complex,
    HomotopyRetract,
    LinearOp,
    NilpotencyError,
    Perturbation,
    check_complex,
    compose_retracts,
    direct_sum,
    geometric_inverse,
    geometric_series_terms,
    identity_retract,
    perturb,
    scalar_complex,
    series_op,
    sum_complex,
    tensor_retract,
    verify_retract,
    zero_complex,
    zero_op,
)
from hkr_retract.van_est import VanEst, Window

from conftest import assert_reports


def toy_contractible(prefix: str = "") -> HomotopyRetract:
    """``a -> b`` with ``d a = 2 b`` retracting onto the zero complex."""
    a, b = prefix + "a", prefix + "b"
    big = Complex("A", LinearOp(lambda lab: {b: 2} if lab == a else {}, degree=1), lambda lab: 0 if lab == a else 1,
                  grading="toy", window=lambda: [a, b])
    h = LinearOp(lambda lab: {a: Fraction(1, 2)} if lab == b else {}, degree=-1)
    return HomotopyRetract(zero_complex(), big, zero_op(), zero_op(), h, name="toy")


def toy_chain(prefix: str = "") -> HomotopyRetract:
    """``R·u ⊕ (a -> b)`` onto ``R``: a non-trivial deformation retract."""
    u, a, b = prefix + "u", prefix + "a", prefix + "b"
    big = Complex("B", LinearOp(lambda lab: {b: 1} if lab == a else {}, degree=1),
                  lambda lab: 1 if lab == b else 0, grading="chain", window=lambda: [u, a, b])
    small = scalar_complex("R", "pt")
    i = LinearOp(lambda lab: {u: 1}, target="chain")
    p = LinearOp(lambda lab: {"pt": 1} if lab == u else {}, target="scalar")
    h = LinearOp(lambda lab: {a: 1} if lab == b else {}, degree=-1, target="chain")
    return HomotopyRetract(small, big, i, p, h, name="chain")


def test_check_complex_passes_and_detects_corruption():
    assert check_complex(ca_complex(3, 3, 3)).ok
    broken = Complex("bad", LinearOp(lambda lab: {lab + "'": 1} if len(lab) < 3 else {}, degree=1),
                     len, window=lambda: ["x"])
    rep = check_complex(broken)
    assert not rep.ok and rep.failures[0].label == "x"


def test_total_van_est_differential_squares_to_zero():
    ve = VanEst(2, window=Window(k_max=3, s_max=2, r_max=3, l_max=2))
    assert_reports([check_complex(ve.total_complex, ve.ve_labels())])


def test_identity_and_toy_retracts():
    c = poincare_retract(2, 2).big
    assert verify_retract(identity_retract(c), require=("special",)).ok
    assert verify_retract(toy_contractible(), require=("special",)).is_special
    assert verify_retract(toy_chain(), require=("special",)).is_special


def test_dropping_the_homotopy_is_caught():
    r = toy_chain()
    broken = HomotopyRetract(r.small, r.big, r.i, r.p, zero_op(-1), name="no h")
    rep = verify_retract(broken)
    assert not rep.ok and not rep.is_retract
    failing = [x for x in rep.reports if not x.ok]
    assert failing[0].failures[0].label in ("a", "b")


def _same_on(op1, op2, labels):
    return all(dict(op1.on_label(lab)) == dict(op2.on_label(lab)) for lab in labels)


def test_composition_with_identity():
    r = toy_chain()
    composed = compose_retracts(identity_retract(r.big), r)
    big, small = r.big.basis(), r.small.basis()
    assert _same_on(composed.i, r.i, small) and _same_on(composed.p, r.p, big) and _same_on(composed.h, r.h, big)


def test_composition_is_associative():
    r = toy_chain()
    id1, id2 = identity_retract(r.big), identity_retract(r.big)
    left = compose_retracts(id2, compose_retracts(id1, r))
    right = compose_retracts(compose_retracts(id2, id1), r)
    big, small = r.big.basis(), r.small.basis()
    for name in ("p", "h"):
        assert _same_on(getattr(left, name), getattr(right, name), big)
    assert _same_on(left.i, right.i, small)
    assert verify_retract(left, require=("special",)).is_special


def test_van_est_as_composite_of_retracts():
    ve = VanEst(2, window=Window(k_max=2, s_max=2, r_max=2, l_max=2))
    composed = ve.composed_retract()
    words = ve.ca_labels()
    assert _same_on(composed.p, ve.VE, words)
    assert _same_on(composed.h, ve.Theta, words)
    assert _same_on(composed.i, ve.VE_inv, ve.ce_labels())


def test_direct_sums():
    r = poincare_retract(2, 2)
    double = direct_sum(r, r)
    assert verify_retract(double, require=("special",)).is_special
    with_zero = direct_sum(r, toy_contractible())
    assert verify_retract(with_zero, require=("deformation",)).ok
    assert [lab for lab in with_zero.small.basis()] == [(0, lab) for lab in r.small.basis()]
    assert sum_complex(zero_complex(), zero_complex()).basis() == []


def test_tensor_with_one_point_complex():
    r = toy_chain()
    one = identity_retract(scalar_complex("R", "*"))
    t = tensor_retract(r, one)
    assert verify_retract(t, require=("special",)).is_special
    assert _same_on(t.h, LinearOp(lambda lab: {(k, "*"): v for k, v in r.h.on_label(lab[0]).items()}),
                    [(lab, "*") for lab in r.big.basis()])


def test_split_retract_is_poincare_tensor_trivial():
    r = split_retract(2, [1], r_max=3)
    assert_reports(verify_retract(r, require=("deformation",)).reports)
    # small complex: R ⊗ Λ U⊥ with U⊥ spanned by e2
    assert r.small.basis() == [((), ()), ((), (2,))]


def test_perturbation_by_zero_changes_nothing():
    r = toy_chain()
    pr = perturb(r, Perturbation(zero_op(1), 3))
    big = r.big.basis()
    assert _same_on(pr.p, r.p, big) and _same_on(pr.h, r.h, big) and _same_on(pr.i, r.i, r.small.basis())
    assert _same_on(pr.big.d, r.big.d, big)


def test_perturbation_matches_explicit_series():
    """Perturb by ``b(u) = 3b``; ``h b`` and ``b h`` are nilpotent after one step."""
    r = toy_chain()
    b = LinearOp(lambda lab: {"b": 3} if lab == "u" else {}, degree=1)
    pr = perturb(r, Perturbation(b, 4))
    rep = verify_retract(pr, require=("deformation",))
    assert_reports(rep.reports)
    # explicit: P = p Σ(-1)^n (bh)^n, H = Σ(-1)^n (hb)^n h, I = Σ(-1)^n (hb)^n i
    assert dict(pr.i.on_label("pt")) == {"u": 1, "a": -3}
    assert dict(pr.p.on_label("b")) == {}
    assert dict(pr.small.d.on_label("pt")) == {}


def test_geometric_series_bounds():
    shift = LinearOp(lambda n: {n + 1: 1}, degree=0)
    with pytest.raises(NilpotencyError):
        geometric_series_terms(shift, {0: 1}, 1)
    nil = LinearOp(lambda n: {n + 1: 1} if n < 2 else {}, degree=0)
    assert geometric_inverse(nil, Element("int", {0: 1}), 5) == Element("int", {0: 1, 1: -1, 2: 1})
    assert dict(series_op(nil, lambda lab: 5).on_label(0)) == {0: 1, 1: -1, 2: 1}
    assert geometric_inverse(shift, Element("int", {}), 1) == Element("int", {})

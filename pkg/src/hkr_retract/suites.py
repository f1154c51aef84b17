"""Verification suites shared by the command line and the acceptance tests.

Each suite takes keyword parameters, runs exact checks over explicit
windows and returns a list of :class:`~hkr_retract.homotopy.Report`.  Suites
never stop at the first failure; callers decide what to do with the reports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .ca_complex import (
    delta_ca_sweedler_word,
    delta_ca_word,
    is_reduced_word,
    make_comodule,
    regular_retract,
)
from .ce_complex import poincare_retract
from .graded_algebra import (
    EXT,
    TENSOR,
    Element,
    accumulate,
    ext_basis_upto,
    ext_coproduct_word,
    iterated_coproduct_word,
    sym_basis_upto,
    sym_coproduct_word,
    tensor_basis_upto,
)
from .hkr_model import (
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
    model_instantiate,
    monomials,
    multivector,
    op_apply,
    op_closure,
    permutation_action,
    shuffle_symbol,
    tangential_check,
    theta_nabla,
    unit_symbol,
)
from .homotopy import HomotopyRetract, Report, check_complex, check_identity, verify_retract
from .scalars import Polynomial, random_polynomial
from .van_est import (
    VE_GRADING,
    MorphismAlong,
    VanEst,
    Window,
    check_equivariance,
    delta_k_power_closed,
    partial_h_power_closed,
    van_est_coeff_closed,
    van_est_coeff_first_slot,
)


class SuiteError(ValueError):
    """Unknown suite or parameters outside the supported range."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SuiteError(msg)


def _clean(d: dict) -> dict:
    return {k: v for k, v in d.items() if v}


# ---------------------------------------------------------------------------
# coalgebra axioms


def coalgebra_suite(dim: int = 4, deg: int = 4) -> list[Report]:
    """Coassociativity, counit and (graded) cocommutativity of both shuffle coproducts."""
    _require(1 <= dim <= 5 and 0 <= deg <= 5, "coalgebra suite supports dim ≤ 5, deg ≤ 5")
    reps = []
    for algebra, basis, cop in (("sym", sym_basis_upto, sym_coproduct_word),
                                ("ext", ext_basis_upto, ext_coproduct_word)):
        words = [w for d in range(1, dim + 1) for w in basis(d, min(deg, d) if algebra == "ext" else deg)]
        words = sorted(set(words))

        def left(w):
            out: dict = {}
            for (a, b), c in cop(w).items():
                for (a1, a2), c1 in cop(a).items():
                    out[(a1, a2, b)] = out.get((a1, a2, b), 0) + c * c1
            return out

        def right(w):
            out: dict = {}
            for (a, b), c in cop(w).items():
                for (b1, b2), c1 in cop(b).items():
                    out[(a, b1, b2)] = out.get((a, b1, b2), 0) + c * c1
            return out

        reps.append(check_identity(f"{algebra}: (Δ⊗id)Δ = (id⊗Δ)Δ", words, left, right))
        reps.append(check_identity(f"{algebra}: (Δ⊗id)Δ = iterated coproduct", words, left,
                                   lambda w: iterated_coproduct_word(w, 3, algebra)))
        reps.append(check_identity(f"{algebra}: (ε⊗id)Δ = id", words,
                                   lambda w: {b: c for (a, b), c in cop(w).items() if a == ()},
                                   lambda w: {w: 1}))
        reps.append(check_identity(f"{algebra}: (id⊗ε)Δ = id", words,
                                   lambda w: {a: c for (a, b), c in cop(w).items() if b == ()},
                                   lambda w: {w: 1}))

        def flipped(w, graded=(algebra == "ext")):
            out = {}
            for (a, b), c in cop(w).items():
                s = -1 if graded and (len(a) * len(b)) % 2 else 1
                out[(b, a)] = s * c
            return out

        reps.append(check_identity(f"{algebra}: τΔ = Δ", words, flipped, lambda w: dict(cop(w))))
    return reps


# ---------------------------------------------------------------------------
# the coalgebra complex


def ca_suite(dim: int = 4, k_max: int = 3, s_max: int = 3) -> list[Report]:
    """``δ_ca² = 0`` and agreement of the two written forms of ``δ_ca``."""
    _require(1 <= dim <= 5 and 0 <= k_max <= 4 and 0 <= s_max <= 4, "ca suite window outside the supported range")
    reps = []
    for d in range(1, dim + 1):
        words = list(tensor_basis_upto(d, k_max, s_max))

        def square(X):
            out: dict = {}
            for Y, c in delta_ca_word(X).items():
                accumulate(out, delta_ca_word(Y), c)
            return out

        reps.append(check_identity(f"δ_ca² = 0 (dim {d})", words, square, lambda X: {}))
        reps.append(check_identity(f"δ_ca = Sweedler form (dim {d})", words,
                                   lambda X: dict(delta_ca_word(X)), delta_ca_sweedler_word))
    return reps


def retracts_suite(dim: int = 3, deg: int = 3) -> list[Report]:
    """``(ι, π, δ⁻¹)`` with regular coefficients and ``(ι, π, ∂⁻¹)`` on ``Sym V ⊗ Λ V``."""
    _require(1 <= dim <= 4 and 0 <= deg <= 4, "retracts suite supports dim ≤ 4, deg ≤ 4")
    reps = []
    for d in range(1, dim + 1):
        r = regular_retract(d, k_max=deg, sym_max=deg, degree=deg)
        reps.extend(verify_retract(r, require=("deformation",)).reports)
        r = poincare_retract(d, r_max=deg, l_max=deg)
        reps.extend(verify_retract(r, require=("special",)).reports)
        reps.append(check_complex(r.big))
    return reps


# ---------------------------------------------------------------------------
# perturbation lemma


def _series(start: dict, step: Callable[[dict], dict], bound: int) -> tuple[dict, bool]:
    """``Σ_n (-1)^n step^n(start)``; the flag says whether it terminated."""
    total = dict(start)
    term = dict(start)
    for _ in range(bound):
        term = {k: -v for k, v in _clean(step(term)).items()}
        if not term:
            return _clean(total), True
        accumulate(total, term)
    return _clean(total), not term


def perturbation_suite(dim: int = 3, k_max: int = 2, s_max: int = 2, r_max: int = 2,
                       l_max: int = 3) -> list[Report]:
    """The perturbed maps against their explicit series, and the two power lemmas."""
    _require(1 <= dim <= 4 and k_max <= 3 and s_max <= 3 and r_max <= 3, "perturbation window outside the supported range")
    ve = VanEst(dim, window=Window(k_max=k_max, s_max=s_max, r_max=r_max, l_max=l_max))
    labels = ve.ve_labels()
    col, row = ve.column_retract, ve.row_retract
    pc, pr = ve.perturbed_column, ve.perturbed_row
    d_, de = ve.partial, ve.delta
    reps = []
    bound = k_max + r_max + l_max + 4

    def dh(t):
        return d_.apply_dict(col.h.apply_dict(t))

    def dk(t):
        return de.apply_dict(row.h.apply_dict(t))

    terminated = Report("perturbation series terminate")
    cache: dict = {}

    def col_series(lab):
        if ("c", lab) not in cache:
            s, ok = _series({lab: 1}, dh, bound)
            terminated.record(("∂h", lab), {} if ok else {"diverged": 1}, {})
            cache[("c", lab)] = s
        return cache[("c", lab)]

    def row_series(lab):
        if ("r", lab) not in cache:
            s, ok = _series({lab: 1}, dk, bound)
            terminated.record(("δk", lab), {} if ok else {"diverged": 1}, {})
            cache[("r", lab)] = s
        return cache[("r", lab)]

    reps.append(check_identity("P = p Σ(−1)ⁿ(∂h)ⁿ", labels, pc.p.on_label,
                               lambda lab: col.p.apply_dict(col_series(lab))))
    reps.append(check_identity("H = h Σ(−1)ⁿ(∂h)ⁿ", labels, pc.h.on_label,
                               lambda lab: col.h.apply_dict(col_series(lab))))
    reps.append(check_identity("Q = q Σ(−1)ⁿ(δk)ⁿ", labels, pr.p.on_label,
                               lambda lab: row.p.apply_dict(row_series(lab))))
    reps.append(check_identity("K = k Σ(−1)ⁿ(δk)ⁿ", labels, pr.h.on_label,
                               lambda lab: row.h.apply_dict(row_series(lab))))
    reps.append(check_identity("Q (recursive) = Q (series)", labels, ve.Q_recursive.on_label, pr.p.on_label))
    reps.append(terminated)

    # (∂h)^n on j(X) and (δk)^n on i(ξ)
    words = list(tensor_basis_upto(dim, k_max + 1, s_max))
    power = Report("(∂h)ⁿ j(X) closed form, 1 ≤ n ≤ k")
    for X in words:
        cur = ve.j.on_label(X)
        for n in range(1, len(X) + 1):
            cur = dh(cur)
            power.record((X, n), _clean(dict(cur)), partial_h_power_closed(X, n))
    reps.append(power)
    power = Report("(δk)ⁿ i(ξ) closed form, 0 ≤ n ≤ ℓ")
    for xi in ext_basis_upto(dim, dim):
        cur = ve.i.on_label(xi)
        power.record((xi, 0), dict(cur), delta_k_power_closed(xi, 0))
        for n in range(1, len(xi) + 1):
            cur = dk(cur)
            power.record((xi, n), _clean(dict(cur)), delta_k_power_closed(xi, n))
    reps.append(power)
    reps.append(check_identity("P j = VE (closed form)", list(tensor_basis_upto(dim, k_max, s_max)),
                               lambda X: pc.p.apply_dict(ve.j.on_label(X)), ve.VE.on_label))
    reps.append(check_identity("Q i = VE⁻¹ (closed form)", ext_basis_upto(dim, dim),
                               lambda xi: pr.p.apply_dict(ve.i.on_label(xi)), ve.VE_inv.on_label))
    return reps


# ---------------------------------------------------------------------------
# van Est


def van_est_suite(dim: int = 3, k_max: int = 3, s_max: int = 3, l_max: int | None = None) -> list[Report]:
    """``VE∘VE⁻¹ = id``, the homotopy identity for ``Θ``, and the chain-map identities."""
    _require(1 <= dim <= 4 and 0 <= k_max <= 4 and 0 <= s_max <= 3, "van Est window outside the supported range")
    l_max = dim if l_max is None else l_max
    ve = VanEst(dim, window=Window(k_max=k_max, s_max=s_max, l_max=l_max))
    words = list(tensor_basis_upto(dim, k_max, s_max))
    exts = ext_basis_upto(dim, min(l_max, dim))
    d = ve.ca_complex().d
    Th, VE, VEi = ve.Theta, ve.VE, ve.VE_inv

    def hom_lhs(X):
        out = d.apply_dict(Th.on_label(X))
        accumulate(out, Th.apply_dict(d.on_label(X)))
        return out

    def hom_rhs(X):
        out = {X: 1}
        accumulate(out, VEi.apply_dict(VE.on_label(X)), -1)
        return out

    return [
        check_identity("VE ∘ VE⁻¹ = id", exts, lambda xi: VE.apply_dict(VEi.on_label(xi)), lambda xi: {xi: 1}),
        check_identity("δ_ca ∘ VE⁻¹ = 0", exts, lambda xi: d.apply_dict(VEi.on_label(xi)), lambda xi: {}),
        check_identity("VE ∘ δ_ca = 0", words, lambda X: VE.apply_dict(d.on_label(X)), lambda X: {}),
        check_identity("δ_ca Θ + Θ δ_ca = id − VE⁻¹ VE", words, hom_lhs, hom_rhs),
    ]


def _comodules(dim: int, deg: int):
    inc = [1, 3] if dim >= 3 else [1]
    return [
        make_comodule("trivial", dim, module_rank=2),
        make_comodule("regular", dim, degree=deg),
        make_comodule("split", dim, perp_rank=1, degree=deg),
        make_comodule("submodule", dim, inclusion=inc, degree=deg),
    ]


def coefficients_suite(dim: int = 3, deg: int = 2, k_max: int = 3, s_max: int | None = None,
                       literal: bool = False) -> list[Report]:
    """The coefficient van Est retract for the four built-in comodules.

    ``literal=False`` checks the retract the library builds (coalgebra side
    with the antipode-twisted comodule, homotopy ``Q_M H_M j_M``) and the
    all-slots formula for ``VE_M``.  ``literal=True`` checks the statement
    as usually written: ``δ_M`` of the comodule itself, ``Θ_M = Q_M H j_M``
    and the first-slot formula for ``k ∈ {1,2,3}``.
    """
    _require(1 <= dim <= 3 and 0 <= deg <= 3 and k_max <= 3, "coefficient window outside the supported range")
    s_max = deg if s_max is None else s_max
    reps = []
    for c in _comodules(dim, deg):
        ve = VanEst(dim, c, Window(k_max=k_max, s_max=s_max, r_max=3, l_max=3))
        tag = f"[{c.kind}]"
        if literal:
            r = HomotopyRetract(ve.ce_complex(), ve.ca_complex_untwisted(), ve.VE_inv, ve.VE,
                                ve.Theta_unperturbed_H, name=f"{tag} stated retract")
            labels = [lab for lab in ve.ca_labels() if 1 <= len(lab[0]) <= 3]
            formula = Report(f"{tag} VE_M = first-slot formula (k = 1, 2, 3)")
            for lab in labels:
                formula.record(lab, dict(ve.VE.on_label(lab)), van_est_coeff_first_slot(lab[0], lab[1], c))
        else:
            r = ve.retract
            r.name = f"{tag} van Est"
            formula = check_identity(f"{tag} VE_M = all-slots formula", ve.ca_labels(), ve.VE.on_label,
                                     lambda lab: van_est_coeff_closed(lab[0], lab[1], c))
        reps.extend(verify_retract(r, require=("deformation",)).reports)
        reps.append(formula)
    return reps


def reduced_suite(dim: int = 3, deg: int = 2, k_max: int = 3) -> list[Report]:
    """Closure of ``T Sym̄ V`` (no unit factors) under ``δ``, ``Θ``, ``VE⁻¹`` and its retract."""
    _require(1 <= dim <= 3 and 0 <= deg <= 3 and k_max <= 3, "reduced window outside the supported range")
    reps = []
    for c in [None] + _comodules(dim, deg):
        ve = VanEst(dim, c, Window(k_max=k_max, s_max=deg, r_max=3, l_max=3, reduced=True))
        tag = f"[{c.kind if c else 'plain'}]"
        r = ve.retract

        def word_of(lab):
            return lab if c is None else lab[0]

        def outside(img):
            return {k: v for k, v in img.items() if not is_reduced_word(word_of(k))}

        big = ve.ca_labels()
        small = ve.ce_labels()
        reps.append(check_identity(f"{tag} δ preserves reduced words", big,
                                   lambda lab: outside(r.big.d.on_label(lab)), lambda lab: {}))
        reps.append(check_identity(f"{tag} Θ preserves reduced words", big,
                                   lambda lab: outside(r.h.on_label(lab)), lambda lab: {}))
        reps.append(check_identity(f"{tag} VE⁻¹ lands in reduced words", small,
                                   lambda lab: outside(r.i.on_label(lab)), lambda lab: {}))
        r.name = f"{tag} reduced van Est"
        reps.extend(verify_retract(r, big, small, require=("deformation",)).reports)
    return reps


# ---------------------------------------------------------------------------
# symbol calculus and HKR


def symbols_suite(n: int = 2, k_max: int = 3, s_max: int = 2, poly_deg: int = 3, tuples: int = 100,
                  seed: int = 0, key_deg: int = 3) -> list[Report]:
    """Key identity, intertwining, cup compatibility and module linearity by evaluation."""
    _require(1 <= n <= 3 and k_max <= 3 and s_max <= 3 and tuples >= 1, "symbol window outside the supported range")
    rng = random.Random(seed)
    key = Report("Op(X)(fg) = Op(Δ_sh X)(f, g)")
    inter = Report("δ_H ∘ Op = Op ∘ δ_ca")
    cupr = Report("Op(X⊗Y) = Op(X) ∪ Op(Y)")
    lin = Report("Op(u·s) = u·Op(s)")
    for dim in range(1, n + 1):
        model = FlatModel(dim)
        rand = lambda: random_polynomial(rng, dim, poly_deg, 4)
        for w in sym_basis_upto(dim, key_deg):
            s = Symbol.word(model, (w,))
            sh = shuffle_symbol(model, w)
            for _ in range(tuples):
                f, g = rand(), rand()
                key.record((dim, w), {0: op_apply(s, [f * g])}, {0: op_apply(sh, [f, g])})
        words = list(tensor_basis_upto(dim, k_max, s_max))
        for X in words:
            s = Symbol.word(model, X)
            ds = delta_symbol(s)
            D = op_closure(s)
            k = len(X)
            for _ in range(tuples):
                args = [rand() for _ in range(k + 1)]
                inter.record((dim, X), {0: hochschild_delta_eval(D, k, args)}, {0: op_apply(ds, args)})
        sample = [w for w in words if len(w) <= 2]
        for _ in range(tuples):
            X, Y = rng.choice(sample), rng.choice(sample)
            a, b = Symbol.word(model, X, rand()), Symbol.word(model, Y, rand())
            fs = [rand() for _ in X]
            gs = [rand() for _ in Y]
            cupr.record((dim, X, Y), {0: op_apply(cup_symbols(a, b), fs + gs)},
                        {0: op_apply(a, fs) * op_apply(b, gs)})
            u = rand()
            lin.record((dim, X), {0: op_apply(a.scale(u), fs)}, {0: u * op_apply(a, fs)})
    return [key, inter, cupr, lin]


def hkr_suite(n: int = 2, k_max: int = 3, s_max: int = 2, poly_deg: int = 1, tuples: int = 2,
              seed: int = 0) -> list[Report]:
    """``hkr⁻¹∘hkr = id`` and ``δΘ^∇ + Θ^∇δ = id − hkr∘hkr⁻¹``, symbolically and by evaluation."""
    _require(1 <= n <= 3 and k_max <= 3 and s_max <= 3, "hkr window outside the supported range")
    rng = random.Random(seed)
    inv = Report("hkr⁻¹ ∘ hkr = id")
    hom = Report("δΘ^∇ + Θ^∇δ = id − hkr∘hkr⁻¹ (symbols)")
    ev = Report("δΘ^∇ + Θ^∇δ = id − hkr∘hkr⁻¹ (evaluation)")
    for dim in range(1, n + 1):
        model = FlatModel(dim)
        mons = monomials(dim, poly_deg)
        for w in ext_basis_upto(dim, dim):
            for e in mons:
                xi = multivector(model, {w: Polynomial.monomial(e)})
                inv.record((dim, e, w), hkr_inverse(hkr(model, xi)).terms, xi.terms)
        for X in tensor_basis_upto(dim, k_max, s_max):
            for e in mons:
                s = Symbol.word(model, X, Polynomial.monomial(e))
                dec = decompose(s)
                lhs = delta_symbol(dec.primitive) + theta_nabla(dec.closedness)
                rhs = s - dec.class_symbol
                hom.record((dim, e, X), lhs.terms, rhs.terms)
            s = Symbol.word(model, X, random_polynomial(rng, dim, 2, 3))
            dec = decompose(s)
            k = len(X)
            for _ in range(tuples):
                args = [random_polynomial(rng, dim, 3, 4) for _ in range(k)]
                prim = dec.primitive
                lhs = op_apply(s, args) - op_apply(dec.class_symbol, args)
                dprim = (hochschild_delta_eval(op_closure(prim), k - 1, args) if k >= 1 and prim
                         else Polynomial.zero(dim))
                rhs = dprim + op_apply(theta_nabla(dec.closedness), args)
                ev.record((dim, X), {0: lhs}, {0: rhs})
    mu = Report("certificate of μ: primitive = identity 1-cochain, δ(id) = μ, class 0")
    for dim in range(1, n + 1):
        model = FlatModel(dim)
        dec = decompose(unit_symbol(model, 2))
        mu.record(dim, dec.primitive.terms, unit_symbol(model, 1).terms)
        mu.record(dim, dec.class_symbol.terms, {})
        mu.record(dim, dec.reconstruction.terms, {})
        for _ in range(5):
            a, b = random_polynomial(rng, dim, 3, 4), random_polynomial(rng, dim, 3, 4)
            mu.record(dim, {0: hochschild_delta_eval(op_closure(dec.primitive), 1, [a, b])}, {0: a * b})
    return [inv, hom, ev, mu]


def variants_suite(seed: int = 0) -> list[Report]:
    """The desk-scale instantiations: bundle, tangential, submersion, projectable, foliation."""
    rng = random.Random(seed)
    reps = []
    # Diffop(E;F) values: degree-0 matrices, intertwining through the section slot
    inst = model_instantiate("bundle", n=1, rE=1, rF=1, k_max=3, s_max=3)
    reps.extend(inst.verify())
    coh = Report("bundle(1,1,1): cohomology = rank-1 matrices in degree 0")
    small = inst.retract.small.basis()
    coh.record("basis", {(lab, inst.retract.small.degree(lab)): 1 for lab in small if lab[0] == (0,)},
               {(((0,), 1), 0): 1})
    reps.append(coh)
    model = inst.model
    inter = Report("bundle: δ_H ∘ Op = Op ∘ δ_M")
    for X in tensor_basis_upto(1, 2, 2):
        for Y in sym_basis_upto(1, 2):
            s = Symbol.word(model, (X, (Y, 1)), random_polynomial(rng, 1, 2, 2), "bundle")
            ds = delta_symbol(s)
            for _ in range(5):
                args = [random_polynomial(rng, 1, 3, 3) for _ in range(len(X) + 1)]
                sec = [random_polynomial(rng, 1, 3, 3)]
                inter.record((X, Y), {0: hochschild_delta_eval(op_closure(s), len(X), args, model, "bundle",
                                                               sec)[0]},
                             {0: op_apply(ds, args, sec)[0]})
    reps.append(inter)

    # tangential operators along {x_2 = 0}
    inst = model_instantiate("submanifold", n=2, m=1)
    reps.extend(inst.verify())
    tm = inst.model
    x2 = Polynomial.variable(2, 2)
    tang = Report("submanifold(2,1): tangential membership and witnesses")
    r1 = tangential_check(Symbol.word(tm, ((1,),)))
    r2 = tangential_check(Symbol.word(tm, ((2,),)))
    r3 = tangential_check(Symbol.word(tm, ((2,),), x2))
    tang.record("∂1", {0: r1.tangential}, {0: True})
    tang.record("∂2", {0: r2.tangential}, {0: False})
    tang.record("∂2 witness", {0: bool(r2.witness) and r2.witness["value"] == Polynomial.one(2).to_json()},
                {0: True})
    tang.record("x2∂2", {0: r3.tangential}, {0: True})
    reps.append(tang)

    # submersion P = R × R → R with Diffop(P) values
    inst = model_instantiate("submersion", n_base=1, n_fiber=1, k_max=3, s_max=2)
    reps.extend(inst.verify())
    vert = Report("submersion(1,1): cohomology = vertical symbols in degree 0")
    vert.record("basis", {w: 1 for (e, w) in inst.retract.small.basis() if e == (0, 0)},
                {w: 1 for w in sym_basis_upto(2, 2) if all(i == 2 for i in w)})
    reps.append(vert)
    inter = Report("submersion: δ_H ∘ Op = Op ∘ δ_M")
    fm = inst.model
    for X in tensor_basis_upto(1, 2, 2):
        for Y in sym_basis_upto(2, 2):
            s = Symbol.word(fm, (X, Y), random_polynomial(rng, 2, 2, 2), "fiber")
            ds = delta_symbol(s)
            for _ in range(3):
                args = [random_polynomial(rng, 1, 3, 3) for _ in range(len(X) + 1)]
                g = random_polynomial(rng, 2, 3, 3)
                inter.record((X, Y), {0: hochschild_delta_eval(op_closure(s), len(X), args, fm, "fiber", g)},
                             {0: op_apply(ds, args, g)})
    reps.append(inter)

    reps.extend(model_instantiate("projectable", n_base=1, n_fiber=1).verify())
    reps.extend(model_instantiate("foliation", n=2, leaf=1).verify())
    return reps


def equivariance_suite(dim: int = 3, n: int = 2, seed: int = 0) -> list[Report]:
    """Permutation and diagonal-derivation equivariance of the van Est and HKR maps."""
    _require(1 <= dim <= 3 and 1 <= n <= 3, "equivariance window outside the supported range")
    reps = []
    perm = list(range(2, dim + 1)) + [1]
    weights = list(range(1, dim + 1))
    actions = [MorphismAlong.permutation(perm, name=f"σ{tuple(perm)}"),
               MorphismAlong({i: {i: Fraction(w)} for i, w in enumerate(weights, 1)}, mode="derivation",
                             name=f"diag{tuple(weights)}")]
    ve = VanEst(dim, window=Window(k_max=2, s_max=2, r_max=2, l_max=dim))
    words = list(tensor_basis_upto(dim, 3, 2))
    exts = ext_basis_upto(dim, dim)
    vel = ve.ve_labels()
    for a in actions:
        reps.append(check_equivariance(a, ve.ca_complex().d, words, TENSOR, TENSOR))
        reps.append(check_equivariance(a, ve.VE, words, TENSOR, EXT))
        reps.append(check_equivariance(a, ve.VE_inv, exts, EXT, TENSOR))
        reps.append(check_equivariance(a, ve.Theta, words, TENSOR, TENSOR))
        for name in ("delta", "partial", "h", "k"):
            reps.append(check_equivariance(a, getattr(ve, name), vel, VE_GRADING, VE_GRADING))
        reps.append(check_equivariance(a, ve.i, exts, EXT, VE_GRADING))
        reps.append(check_equivariance(a, ve.p, vel, VE_GRADING, EXT))
        reps.append(check_equivariance(a, ve.j, words, TENSOR, VE_GRADING))
        reps.append(check_equivariance(a, ve.q, vel, VE_GRADING, TENSOR))
    rng = random.Random(seed)
    model = FlatModel(n)
    hperm = list(range(2, n + 1)) + [1]
    hactions = [permutation_action(model, hperm), diagonal_derivation(model, list(range(1, n + 1)))]
    syms = [Symbol.word(model, X, random_polynomial(rng, n, 2, 2)) for X in tensor_basis_upto(n, 2, 2)]
    mvs = [multivector(model, {w: random_polynomial(rng, n, 2, 2)}) for w in ext_basis_upto(n, n)]
    for a in hactions:
        reps.extend(equivariance_reports(model, a, syms, mvs, tuples=3, seed=seed))
    inst = model_instantiate("invariant", n=n, perms=[hperm])
    reps.extend(inst.verify())
    return reps


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class SuiteSpec:
    run: Callable[..., list[Report]]
    params: tuple[str, ...]
    help: str


def _van_est_cli(dim=3, deg=3, **_):
    return van_est_suite(dim, k_max=deg, s_max=deg)


SUITES: dict[str, SuiteSpec] = {
    "coalgebra": SuiteSpec(lambda dim=4, deg=4, **_: coalgebra_suite(dim, deg), ("dim", "deg"),
                           "shuffle coproduct axioms"),
    "ca": SuiteSpec(lambda dim=4, deg=3, **_: ca_suite(dim, 3, deg), ("dim", "deg"), "δ_ca² = 0, Sweedler form"),
    "retracts": SuiteSpec(lambda dim=3, deg=3, **_: retracts_suite(dim, deg), ("dim", "deg"),
                          "regular-coefficient and Poincaré retracts"),
    "perturbation": SuiteSpec(lambda dim=3, deg=2, **_: perturbation_suite(dim, deg, deg, deg), ("dim", "deg"),
                              "perturbation lemma against explicit series"),
    "van_est": SuiteSpec(_van_est_cli, ("dim", "deg"), "van Est deformation retract"),
    "coefficients": SuiteSpec(lambda dim=3, deg=2, **_: coefficients_suite(dim, deg), ("dim", "deg"),
                              "coefficient retract as built by the library"),
    "coefficients_stated": SuiteSpec(lambda dim=3, deg=2, **_: coefficients_suite(dim, deg, literal=True),
                                     ("dim", "deg"), "coefficient retract as usually stated"),
    "reduced": SuiteSpec(lambda dim=3, deg=2, **_: reduced_suite(dim, deg), ("dim", "deg"),
                         "reduced subcomplex and its retract"),
    "symbols": SuiteSpec(lambda n=2, deg=2, seed=0, **_: symbols_suite(n, 3, deg, seed=seed),
                         ("n", "deg", "seed"), "symbol calculus by evaluation"),
    "hkr": SuiteSpec(lambda n=2, deg=2, seed=0, **_: hkr_suite(n, 3, deg, seed=seed), ("n", "deg", "seed"),
                     "HKR retract"),
    "variants": SuiteSpec(lambda seed=0, **_: variants_suite(seed), ("seed",), "variant theorems"),
    "equivariance": SuiteSpec(lambda dim=3, n=2, seed=0, **_: equivariance_suite(dim, n, seed),
                              ("dim", "n", "seed"), "permutation / derivation equivariance"),
}


def run_suite(name: str, **params) -> list[Report]:
    spec = SUITES.get(name)
    if spec is None:
        raise SuiteError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    given = {k: v for k, v in params.items() if v is not None and k in spec.params}
    return spec.run(**given)

"""Chevalley–Eilenberg complex of the abelian Lie coalgebra V with coefficients.

Labels of ``C_CE(V, M) = M ⊗ Λ V`` are pairs ``(m, ξ)`` with ``ξ`` an
ExtWord.  For ``M = Sym V`` the pair reads ``(φ, ξ)`` and the bigraded
algebra ``Sym V ⊗ Λ V`` carries the Koszul-type homotopy ``∂*``.

Lie coactions are right coactions ``ρ(m) = m_(0) ⊗ m_(1)``, stored as a
table ``m -> {(m', v): c}`` with ``v`` a basis index of V.
"""

from __future__ import annotations

import math
from itertools import combinations
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Sequence

from .ca_complex import Comodule, ComoduleError, make_comodule
from .graded_algebra import ext_basis_upto, ext_normalize, sym_basis_upto, sym_coproduct_word
from .homotopy import (
    Complex,
    HomotopyRetract,
    LinearOp,
    Report,
    check_identity,
    identity_op,
    identity_retract,
    scalar_complex,
    tensor_retract,
    transport,
    zero_op,
)

CE = "ce"


@dataclass
class LieCoaction:
    """A right Lie coaction ``ρ: M -> M ⊗ V`` on a finite basis."""

    rank: int
    basis: list
    rho_fn: Callable[[Hashable], Mapping[tuple[Hashable, int], Any]]
    name: str = "ρ"

    def __post_init__(self):
        self._table: dict = {}

    def rho(self, m) -> Mapping[tuple[Hashable, int], Any]:
        got = self._table.get(m)
        if got is None:
            got = {k: v for k, v in self.rho_fn(m).items() if v}
            self._table[m] = got
        return got

    def check(self) -> Report:
        """``(ρ ⊗ id) ρ`` is symmetric in its two V slots."""

        def twice(m, swap):
            out: dict = {}
            for (m1, v), c in self.rho(m).items():
                for (m2, w), c2 in self.rho(m1).items():
                    key = (m2, v, w) if not swap else (m2, w, v)
                    out[key] = out.get(key, 0) + c * c2
            return out

        return check_identity(f"{self.name}: symmetric square", self.basis,
                              lambda m: twice(m, False), lambda m: twice(m, True))


def lie_coaction_from_comodule(c: Comodule, check: bool = True) -> LieCoaction:
    """The infinitesimal coaction ``ρ(m) = -m_(0) ⊗ pr_V(m_(-1))``."""

    def rho(m):
        out: dict = {}
        for (s, m1), v in c.coaction(m).items():
            if len(s) == 1:
                key = (m1, s[0])
                out[key] = out.get(key, 0) - v
        return out

    lc = LieCoaction(c.rank, list(c.basis), rho, name=f"ρ_{c.kind}")
    if check:
        rep = lc.check()
        if not rep.ok:
            raise ComoduleError(f"not a Lie coaction: {rep}")
    return lc


def rho_power(lc: LieCoaction, m, r: int) -> dict:
    """``ρ^r(m)`` with the r V-letters collected into one symmetric word.

    Returns ``{(m', w): c}`` where ``w`` is a sorted tuple of r indices.
    """
    current: dict = {(m, ()): 1}
    for _ in range(r):
        nxt: dict = {}
        for (m1, w), c in current.items():
            for (m2, v), c2 in lc.rho(m1).items():
                key = (m2, tuple(sorted(w + (v,))))
                nxt[key] = nxt.get(key, 0) + c * c2
        current = {k: v for k, v in nxt.items() if v}
        if not current:
            break
    return current


def reconstruct_coaction(lc: LieCoaction, m, max_degree: int) -> dict:
    """``Σ_r ρ^r(m) / r!`` as ``{(m', w): c}``; equals ``m_(0) ⊗ s(m_(-1))``.

    Flipping and applying the antipode gives back the comodule coaction.
    """
    out: dict = {}
    for r in range(max_degree + 1):
        f = Fraction(1, math.factorial(r))
        for key, c in rho_power(lc, m, r).items():
            out[key] = out.get(key, 0) + f * c
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------------------
# differentials


def partial_M_label(label, lc: LieCoaction) -> dict:
    m, xi = label
    out: dict = {}
    for (m1, v), c in lc.rho(m).items():
        s, w = ext_normalize((v,) + xi)
        if s:
            key = (m1, w)
            out[key] = out.get(key, 0) - s * c
    return out


def partial_M(x, lc: LieCoaction):
    """``∂_M(m ⊗ ξ) = -m_(0) ⊗ (m_(1) ∧ ξ)``."""
    return x.map_labels(lambda lab: partial_M_label(lab, lc), CE)


def partial_sym_label(label) -> dict:
    """``∂_{Sym V}`` on ``φ ⊗ ξ``: move each letter of φ (with multiplicity) in front of ξ."""
    phi, xi = label
    out: dict = {}
    for (rest, letter), c in sym_coproduct_word(phi).items():
        if len(letter) != 1:
            continue
        s, w = ext_normalize(letter + xi)
        if s:
            key = (rest, w)
            out[key] = out.get(key, 0) + s * c
    return out


def partial_star_label(label) -> dict:
    phi, xi = label
    out: dict = {}
    for i, v in enumerate(xi):
        key = (tuple(sorted(phi + (v,))), xi[:i] + xi[i + 1:])
        out[key] = out.get(key, 0) + (1 if i % 2 == 0 else -1)
    return out


def partial_star(x):
    """``∂*(φ ⊗ ξ_1∧…∧ξ_ℓ) = Σ_i (-1)^{i+1} φ∨ξ_i ⊗ ξ_1∧…ξ̂_i…∧ξ_ℓ``."""
    return x.map_labels(partial_star_label, CE)


def partial_inverse_label(label) -> dict:
    phi, xi = label
    total = len(phi) + len(xi)
    if total == 0:
        return {}
    f = Fraction(1, total)
    return {k: f * v for k, v in partial_star_label(label).items()}


def partial_inverse(x):
    """``∂⁻¹ = ∂* / (r + ℓ)`` on ``Sym^r V ⊗ Λ^ℓ V``; zero in bidegree (0, 0)."""
    return x.map_labels(partial_inverse_label, CE)


def deg_s(label) -> int:
    return len(label[0])


def deg_a(label) -> int:
    return len(label[1])


def bigraded_product(a_label, b_label) -> tuple[int, tuple]:
    """Product on ``Sym V ⊗ Λ V``: ``(φ⊗ξ)(ψ⊗η) = φψ ⊗ ξ∧η`` (Sym part is even)."""
    s, w = ext_normalize(a_label[1] + b_label[1])
    return s, (tuple(sorted(a_label[0] + b_label[0])), w)


# ---------------------------------------------------------------------------
# complexes and retracts


def ce_complex(lc: LieCoaction, l_max: int | None = None, name: str | None = None) -> Complex:
    l_max = lc.rank if l_max is None else l_max

    def window():
        for m in lc.basis:
            for xi in ext_basis_upto(lc.rank, l_max):
                yield (m, xi)

    return Complex(name or f"C_CE(V{lc.rank},{lc.name})",
                   LinearOp(lambda lab: partial_M_label(lab, lc), degree=1, target=CE, name="∂_M"),
                   deg_a, grading=CE, window=window)


def ce_complex_sym(rank: int, r_max: int = 3, l_max: int | None = None) -> Complex:
    """``(Sym V ⊗ Λ V, ∂_{Sym V})`` written with the direct letter-moving formula."""
    l_max = rank if l_max is None else l_max
    return Complex(f"C_CE(V{rank},SymV)",
                   LinearOp(partial_sym_label, degree=1, target=CE, name="∂_SymV"),
                   deg_a, grading=CE,
                   window=lambda: [(phi, xi) for phi in sym_basis_upto(rank, r_max)
                                   for xi in ext_basis_upto(rank, l_max)])


def poincare_retract(rank: int, r_max: int = 3, l_max: int | None = None) -> HomotopyRetract:
    """``(ι, π, ∂⁻¹)`` between ``R`` and ``(Sym V ⊗ Λ V, ∂_{Sym V})``."""
    big = ce_complex_sym(rank, r_max, l_max)
    small = scalar_complex("R", ())
    unit = ((), ())
    iota = LinearOp(lambda lab: {unit: 1}, target=CE, name="ι")
    pi = LinearOp(lambda lab: {(): 1} if lab == unit else {}, target="scalar", name="π")
    h = LinearOp(partial_inverse_label, degree=-1, target=CE, name="∂⁻¹")
    return HomotopyRetract(small, big, iota, pi, h, name="Poincaré")


def _ext_zero_complex(indices: Sequence[int], l_max: int, name: str) -> Complex:
    idx = sorted(indices)
    return Complex(name, zero_op(1, "ext"), lambda xi: len(xi), grading="ext",
                   window=lambda: [w for l in range(min(l_max, len(idx)) + 1)
                                   for w in combinations(idx, l)])


def split_retract(rank: int, inclusion: Sequence[int], r_max: int = 3,
                  l_max: int | None = None) -> HomotopyRetract:
    """Retract of ``C_CE(V, Sym U)`` onto ``(Λ U⊥, 0)``.

    ``inclusion[a-1]`` is the V-index of the a-th basis vector of U; the
    remaining V-indices span ``U⊥``.  Built as the Poincaré retract on U
    tensored with the identity retract on ``(Λ U⊥, 0)`` and transported
    along ``Λ V ≅ Λ U ⊗ Λ U⊥``.
    """
    inc = list(inclusion)
    if len(set(inc)) != len(inc) or any(not 1 <= v <= rank for v in inc):
        raise ComoduleError(f"bad partition: {inc} is not an injective map into 1..{rank}")
    l_max = rank if l_max is None else l_max
    perp = [v for v in range(1, rank + 1) if v not in inc]
    back = {v: a for a, v in enumerate(inc, start=1)}
    com = make_comodule("submodule", rank, degree=r_max, inclusion=inc)
    lc = lie_coaction_from_comodule(com)
    big = ce_complex(lc, l_max, name=f"C_CE(V{rank},SymU)")

    dim_u = len(inc)
    poin = poincare_retract(dim_u, r_max, dim_u) if dim_u else None
    if poin is None:
        # U = 0: Sym U = R and the whole complex is (Λ V, 0)
        left = identity_retract(scalar_complex("R", ((), ())), "R")
    else:
        left = poin
    right_c = _ext_zero_complex(perp, l_max, "ΛU⊥")
    tens = tensor_retract(left, identity_retract(right_c, "id"))

    def to_old(label):
        phi, xi = label
        u_part = [v for v in xi if v in back]
        p_part = tuple(v for v in xi if v not in back)
        s, _ = ext_normalize(tuple(u_part) + p_part)
        xu = tuple(back[v] for v in u_part)
        return {((phi, xu), p_part): s}

    def from_old(label):
        (phi, xu), p_part = label
        s, w = ext_normalize(tuple(inc[a - 1] for a in xu) + p_part)
        return {(phi, w): s} if s else {}

    small = tens.small
    r = transport(tens, big, LinearOp(to_old, target=tens.big.grading, name="ΛV≅ΛU⊗ΛU⊥"),
                  LinearOp(from_old, target=CE, name="ΛU⊗ΛU⊥≅ΛV"), name=f"split(U={inc})")
    r.small = small
    return r


def split_sym_retract(rank: int, perp_rank: int, r_max: int = 3, l_max: int | None = None) -> HomotopyRetract:
    """Retract of ``C_CE(V, Sym W)``, ``W = V ⊕ V⊥`` (split comodule), onto ``Sym V⊥`` in degree 0.

    Poincaré on V tensored with the identity on ``(Sym V⊥, 0)``; a W-word
    splits as (V-letters, V⊥-letters) and all V⊥ structure is inert.
    """
    l_max = rank if l_max is None else l_max
    com = make_comodule("split", rank, degree=r_max, perp_rank=perp_rank)
    lc = lie_coaction_from_comodule(com)
    big = ce_complex(lc, l_max, name=f"C_CE(V{rank},SymW)")
    poin = poincare_retract(rank, r_max, l_max)
    perp_c = Complex("SymV⊥", zero_op(1, "sym"), lambda w: 0, grading="sym",
                     window=lambda: [w for w in sym_basis_upto(rank + perp_rank, r_max)
                                     if all(i > rank for i in w)])
    tens = tensor_retract(poin, identity_retract(perp_c, "id"))

    def to_old(label):
        w, xi = label
        return {((tuple(i for i in w if i <= rank), xi), tuple(i for i in w if i > rank)): 1}

    def from_old(label):
        (wv, xi), wp = label
        return {(tuple(sorted(wv + wp)), xi): 1}

    r = transport(tens, big, LinearOp(to_old, target=tens.big.grading),
                  LinearOp(from_old, target=CE), name="split Sym W")
    return r

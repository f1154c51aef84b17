"""The coalgebra complex ``C_Ca(V, M) = T Sym V ⊗ M`` and its comodule coefficients.

Labels: a plain tensor word ``X`` for ``C_Ca(V)``, and a pair ``(X, m)`` once
a comodule ``M`` is attached.  The differential on ``T Sym V`` extends
``-Δ̄_sh`` as a graded derivation; with coefficients the last tensor slot
also absorbs the positive-degree part of the coaction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

from . import _faults
from .graded_algebra import (
    SYM,
    TENSOR,
    Element,
    SymWord,
    TensorWord,
    accumulate,
    label_from_json,
    label_to_json,
    sym_basis_upto,
    sym_coproduct_word,
    sym_reduced_coproduct_word,
    tensor_basis_upto,
)
from .homotopy import Complex, HomotopyRetract, LinearOp, Report, check_identity, scalar_complex
from .scalars import scalar_from_json, scalar_to_json

CA = "ca"  # grading tag of T Sym V ⊗ M


# ---------------------------------------------------------------------------
# the differential on T Sym V


@lru_cache(maxsize=None)
def delta_ca_word(word: TensorWord) -> dict[TensorWord, int]:
    out: dict[TensorWord, int] = {}
    k = len(word)
    faulty = _faults.active("delta_ca")
    for i, factor in enumerate(word, start=1):
        sign = -1 if i % 2 else 1
        if faulty and i == k and k >= 2:
            sign = -sign
        before, after = word[: i - 1], word[i:]
        for (a, b), c in sym_reduced_coproduct_word(factor).items():
            key = before + (a, b) + after
            out[key] = out.get(key, 0) + sign * c
    return {w: c for w, c in out.items() if c}


_faults.register_cache(delta_ca_word.cache_clear)


def delta_ca(x: Element) -> Element:
    """``δ_ca(X) = Σ_i (-1)^i (id^{i-1} ⊗ Δ̄_sh ⊗ id^{k-i})(X)``; zero on tensor degree 0."""
    return x.map_labels(delta_ca_word, TENSOR)


def delta_ca_sweedler_word(word: TensorWord) -> dict[TensorWord, int]:
    """The same differential written with the full coproduct.

    ``𝟙⊗X + Σ_i (-1)^i X_1⊗…⊗(X_i)_(1)⊗(X_i)_(2)⊗…⊗X_k + (-1)^{k+1} X⊗𝟙``.
    Deliberately does not share code with :func:`delta_ca_word`.
    """
    k = len(word)
    if k == 0:
        return {}
    out: dict[TensorWord, int] = {((),) + word: 1}
    tail = ((),)
    out[word + tail] = out.get(word + tail, 0) + (1 if k % 2 else -1)
    for i in range(k):
        sign = 1 if i % 2 else -1  # (-1)^{i+1} with 0-based i
        for (a, b), c in sym_coproduct_word(word[i]).items():
            key = word[:i] + (a, b) + word[i + 1:]
            out[key] = out.get(key, 0) + sign * c
    return {w: c for w, c in out.items() if c}


def delta_ca_sweedler(x: Element) -> Element:
    return x.map_labels(delta_ca_sweedler_word, TENSOR)


def cup(x: Element, y: Element) -> Element:
    """Tensor concatenation ``X ⊗ Y``; with coefficients the module label stays on the right."""
    out: dict = {}
    grading = TENSOR
    for X, a in x.items():
        if x.grading != TENSOR:
            raise ValueError("the left factor of cup must be a plain tensor word")
        for Y, b in y.items():
            if y.grading == CA:
                Yw, m = Y
                key = (X + Yw, m)
                grading = CA
            else:
                key = X + Y
            out[key] = out.get(key, 0) + a * b
    return Element(grading, out)


# ---------------------------------------------------------------------------
# comodules


@dataclass
class Comodule:
    """A left ``Sym V``-comodule on a finite basis.

    ``coaction(m)`` returns ``{(s, m'): c}`` meaning ``L(m) = Σ c · s ⊗ m'``.
    """

    rank: int
    basis: list
    coaction_fn: Callable[[Hashable], Mapping[tuple[SymWord, Hashable], Any]]
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self._table: dict = {}

    def coaction(self, m) -> Mapping:
        got = self._table.get(m)
        if got is None:
            got = {k: v for k, v in self.coaction_fn(m).items() if v}
            self._table[m] = got
        return got

    def table(self) -> dict:
        return {m: dict(self.coaction(m)) for m in self.basis}

    # -- axioms ---------------------------------------------------------
    def check_coassociativity(self) -> Report:
        def lhs(m):  # (id ⊗ L) L
            out: dict = {}
            for (s, m1), c in self.coaction(m).items():
                for (t, m2), c2 in self.coaction(m1).items():
                    key = (s, t, m2)
                    out[key] = out.get(key, 0) + c * c2
            return out

        def rhs(m):  # (Δ_sh ⊗ id) L
            out: dict = {}
            for (s, m1), c in self.coaction(m).items():
                for (a, b), c2 in sym_coproduct_word(s).items():
                    key = (a, b, m1)
                    out[key] = out.get(key, 0) + c * c2
            return out

        return check_identity(f"{self.kind}: coassociativity", self.basis, lhs, rhs)

    def check_counit(self) -> Report:
        def lhs(m):
            out: dict = {}
            for (s, m1), c in self.coaction(m).items():
                if s == ():
                    out[m1] = out.get(m1, 0) + c
            return out

        return check_identity(f"{self.kind}: counit", self.basis, lhs, lambda m: {m: 1})

    def verify(self) -> list[Report]:
        return [self.check_coassociativity(), self.check_counit()]

    # -- serialization --------------------------------------------------
    def to_json(self) -> dict:
        rows = []
        for m in self.basis:
            terms = sorted(self.coaction(m).items(), key=lambda kv: repr(kv[0]))
            rows.append([
                label_to_json(m),
                {"grading": "sym⊗M", "terms": [[label_to_json(k), scalar_to_json(v)] for k, v in terms]},
            ])
        return {"module_rank": self.rank, "basis": [label_to_json(m) for m in self.basis], "coaction": rows}

    @classmethod
    def from_json(cls, data: Mapping) -> "Comodule":
        try:
            rank = int(data["module_rank"])
            basis = [label_from_json(m) for m in data["basis"]]
            table = {}
            for m, elem in data["coaction"]:
                terms = {}
                for lab, c in elem["terms"]:
                    s, m1 = label_from_json(lab)
                    terms[(tuple(s), m1)] = scalar_from_json(c)
                table[label_from_json(m)] = terms
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed comodule JSON: {exc}") from exc
        com = cls(rank, basis, lambda m: table[m], kind="json")
        bad = [r for r in com.verify() if not r.ok]
        if bad:
            raise ValueError(f"comodule axioms fail: {bad}")
        return com


class ComoduleError(ValueError):
    pass


def make_comodule(kind: str, rank: int, *, degree: int = 3, module_rank: int = 1,
                  perp_rank: int = 0, inclusion: Sequence[int] | None = None,
                  check: bool = True) -> Comodule:
    """Built-in comodules over ``Sym V`` with ``dim V = rank``.

    * ``trivial``: ``L(m) = 𝟙 ⊗ m`` on a free module of rank ``module_rank``;
    * ``regular``: ``Sym^{≤degree} V`` with ``L = Δ_sh``;
    * ``sym_tensor_trivial``: ``Sym^{≤degree} V ⊗ M`` with ``Δ_sh ⊗ id``;
    * ``split``: ``Sym^{≤degree} W`` for ``W = V ⊕ V⊥`` (``dim V⊥ = perp_rank``;
      indices ``rank+1..`` span V⊥) with ``L = (pr_V ⊗ id) Δ_sh``;
    * ``submodule``: ``Sym^{≤degree} U`` for ``U ⊆ V`` given by the injective
      basis map ``inclusion`` (U-index ``a`` goes to V-index ``inclusion[a-1]``).
    """
    if rank < 1:
        raise ComoduleError("dim V must be at least 1")
    if kind == "trivial":
        basis = list(range(1, module_rank + 1))
        com = Comodule(rank, basis, lambda m: {((), m): 1}, kind, {"module_rank": module_rank})
    elif kind == "regular":
        basis = sym_basis_upto(rank, degree)
        com = Comodule(rank, basis, lambda m: sym_coproduct_word(m), kind, {"degree": degree})
    elif kind == "sym_tensor_trivial":
        basis = [(w, a) for w in sym_basis_upto(rank, degree) for a in range(1, module_rank + 1)]

        def L(m):
            w, a = m
            return {(s, (t, a)): c for (s, t), c in sym_coproduct_word(w).items()}

        com = Comodule(rank, basis, L, kind, {"degree": degree, "module_rank": module_rank})
    elif kind == "split":
        if perp_rank < 0:
            raise ComoduleError("perp_rank must be non-negative")
        basis = sym_basis_upto(rank + perp_rank, degree)

        def L(m):
            return {(s, t): c for (s, t), c in sym_coproduct_word(m).items() if all(i <= rank for i in s)}

        com = Comodule(rank, basis, L, kind, {"degree": degree, "perp_rank": perp_rank})
    elif kind == "submodule":
        if inclusion is None:
            raise ComoduleError("submodule comodules need an inclusion map")
        inc = list(inclusion)
        if len(set(inc)) != len(inc) or any(not 1 <= v <= rank for v in inc):
            raise ComoduleError(f"inclusion {inc} is not an injective map into 1..{rank}")
        basis = sym_basis_upto(len(inc), degree)

        def L(m):
            out: dict = {}
            for (s, t), c in sym_coproduct_word(m).items():
                key = (tuple(sorted(inc[a - 1] for a in s)), t)
                out[key] = out.get(key, 0) + c
            return out

        com = Comodule(rank, basis, L, kind, {"degree": degree, "inclusion": inc})
    else:
        raise ComoduleError(f"unknown comodule kind {kind!r}")
    if check:
        bad = [r for r in com.verify() if not r.ok]
        if bad:
            raise ComoduleError(f"comodule axioms fail: {bad}")
    return com


def antipode_twist(c: Comodule) -> Comodule:
    """The comodule ``M^s`` with coaction ``m ↦ s(m_(-1)) ⊗ m_(0)``.

    Since ``Sym V`` is commutative and cocommutative the antipode is a bialgebra
    map, so this is again a comodule; it is the coefficient comodule whose
    ``δ`` arises on the coalgebra side of the van Est perturbation by ``B``.
    """
    def L(m):
        return {(s, m1): (-v if len(s) % 2 else v) for (s, m1), v in c.coaction(m).items()}

    return Comodule(c.rank, list(c.basis), L, f"{c.kind}^s", dict(c.params))


# ---------------------------------------------------------------------------
# differential with coefficients


def delta_M_label(label, c: Comodule) -> dict:
    X, m = label
    out: dict = {}
    for Y, v in delta_ca_word(X).items():
        out[(Y, m)] = out.get((Y, m), 0) + v
    sign = 1 if len(X) % 2 else -1  # (-1)^{k+1}
    for (s, m1), v in c.coaction(m).items():
        if s == ():
            continue
        key = (X + (s,), m1)
        out[key] = out.get(key, 0) + sign * v
    return out


def delta_M(x: Element, c: Comodule) -> Element:
    """``δ_ca(X)⊗m + (-1)^{k+1} (X ⊗ pr_+(m_(-1))) ⊗ m_(0)``."""
    return x.map_labels(lambda lab: delta_M_label(lab, c), CA)


def delta_inverse_label(label) -> dict:
    X, phi = label
    if not X or phi != ():
        return {}
    return {(X[:-1], X[-1]): (-1 if len(X) % 2 else 1)}


def delta_inverse(x: Element, c: Comodule) -> Element:
    """``(-1)^k ε(φ) (X_1⊗…⊗X_{k-1}) ⊗ X_k``; only for the regular comodule."""
    if c.kind != "regular":
        raise ComoduleError("δ⁻¹ is only defined for the regular comodule Sym V")
    return x.map_labels(delta_inverse_label, CA)


def reduced_restrict(x: Element):
    """Return ``(True, x)`` if no tensor word contains a 𝟙 factor, else ``(False, witness)``."""
    for lab, c in x.items():
        word = lab[0] if x.grading == CA else lab
        if any(f == () for f in word):
            return False, lab
    return True, x


def is_reduced_word(word: TensorWord) -> bool:
    return all(f != () for f in word)


# ---------------------------------------------------------------------------
# complexes and retracts


def tensor_degree(label) -> int:
    return len(label)


def ca_complex(rank: int, k_max: int = 3, sym_max: int = 3, reduced: bool = False) -> Complex:
    """``(T Sym V, δ_ca)`` with a window of tensor degree ≤ k_max, factor degree ≤ sym_max."""
    lo = 1 if reduced else 0
    return Complex(
        f"C_Ca(V{rank})" + ("_red" if reduced else ""),
        LinearOp(delta_ca_word, degree=1, target=TENSOR, name="δ_ca"),
        tensor_degree,
        grading=TENSOR,
        window=lambda: tensor_basis_upto(rank, k_max, sym_max, lo),
    )


def ca_complex_with(c: Comodule, k_max: int = 3, sym_max: int = 3, reduced: bool = False) -> Complex:
    lo = 1 if reduced else 0

    def window():
        for X in tensor_basis_upto(c.rank, k_max, sym_max, lo):
            for m in c.basis:
                yield (X, m)

    return Complex(
        f"C_Ca(V{c.rank},{c.kind})" + ("_red" if reduced else ""),
        LinearOp(lambda lab: delta_M_label(lab, c), degree=1, target=CA, name="δ_M"),
        lambda lab: len(lab[0]),
        grading=CA,
        window=window,
    )


def regular_retract(rank: int, k_max: int = 3, sym_max: int = 3, degree: int = 3) -> HomotopyRetract:
    """``(ι, π, δ⁻¹)`` between ``R`` and ``C_Ca(V, Sym V)``: the cohomology is ``R`` in degree 0."""
    com = make_comodule("regular", rank, degree=degree)
    big = ca_complex_with(com, k_max, sym_max)
    small = scalar_complex("R", ())
    unit = ((), ())
    iota = LinearOp(lambda lab: {unit: 1}, target=CA, name="ι")
    pi = LinearOp(lambda lab: {(): 1} if lab == unit else {}, target="scalar", name="π")
    h = LinearOp(delta_inverse_label, degree=-1, target=CA, name="δ⁻¹")
    return HomotopyRetract(small, big, iota, pi, h, name="regular coefficients")


def sym_tensor_trivial_retract(rank: int, module_rank: int = 2, k_max: int = 3, sym_max: int = 3,
                               degree: int = 3) -> HomotopyRetract:
    """The regular retract tensored with ``id_M``: cohomology ``M`` in degree 0."""
    com = make_comodule("sym_tensor_trivial", rank, degree=degree, module_rank=module_rank)
    big = ca_complex_with(com, k_max, sym_max)
    small = Complex("M", LinearOp(lambda lab: {}, degree=1, name="0"), lambda lab: 0, grading="M",
                    window=lambda: list(range(1, module_rank + 1)))
    iota = LinearOp(lambda a: {((), ((), a)): 1}, target=CA, name="ι⊗id")

    def pi(lab):
        X, (phi, a) = lab
        return {a: 1} if X == () and phi == () else {}

    def h(lab):
        X, (phi, a) = lab
        return {(Y, (psi, a)): v for (Y, psi), v in delta_inverse_label((X, phi)).items()}

    return HomotopyRetract(small, big, iota, LinearOp(pi, target="M", name="π⊗id"),
                           LinearOp(h, degree=-1, target=CA, name="δ⁻¹⊗id"),
                           name="Sym V ⊗ M coefficients")

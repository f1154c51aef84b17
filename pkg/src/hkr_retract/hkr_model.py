"""The flat polynomial model: symbols, their operators, and the HKR retract.

Functions are polynomials in ``x_1..x_n`` and ``V`` is the free module on
``∂_1..∂_n``.  A multidifferential operator is carried by its *symbol*, an
element of ``T Sym V`` with polynomial coefficients; :func:`op_apply`
evaluates it.  With the flat covariant derivative the symmetrized
derivative of ``f`` is the tensor of all higher partials, so
``Op(X_1⊗…⊗X_k)(f_1,…,f_k) = Π ∂^{X_i} f_i`` once the ``1/n_i!`` prefactors
are applied.

Three symbol variants are supported:

* ``scalar``: labels are tensor words ``X``;
* ``bundle``: operators ``A^k × Γ(E) → Γ(F)`` for trivial bundles of ranks
  ``rE``, ``rF``; labels ``(X, (Y, a))`` where ``Y`` derives the section and
  ``a`` indexes the elementary matrix ``E_{rc}`` (see :func:`matrix_slot`);
* ``fiber``: operators on the base of a coordinate projection
  ``P = M × F → M`` with values in ``Diffop(P)``; labels ``(X, Y)`` with ``X``
  over base directions and ``Y`` over all directions of ``P``.

Every structure map on the symbol side is linear over the polynomial ring,
so it acts on the word labels and carries the coefficient along.  For
verification windows the coefficient is split into monomials: the model
retracts built by :func:`model_instantiate` use labels ``(e, w)`` meaning
``x^e · w``, which gives genuine rational bases of the tangential, foliated
and projectable subcomplexes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, permutations, product
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import _faults
from .ca_complex import (
    CA,
    ca_complex_with,
    delta_ca_word,
    delta_inverse_label,
    delta_M_label,
    make_comodule,
    sym_tensor_trivial_retract,
)
from .graded_algebra import (
    EXT,
    TENSOR,
    Element,
    ExtWord,
    SymWord,
    TensorWord,
    _sort_key,
    ext_basis_upto,
    label_from_json,
    label_to_json,
    sym_basis_upto,
    sym_coproduct_word,
    tensor_basis_upto,
)
from .homotopy import (
    Complex,
    HomotopyRetract,
    LinearOp,
    Report,
    RetractReport,
    check_identity,
    direct_sum,
    verify_retract,
)
from .scalars import Polynomial, random_polynomial, rational, rational_to_json, scalar_from_json
from .van_est import MorphismAlong, VanEst, Window, plain, van_est_inverse_word, van_est_word

VARIANTS = ("scalar", "bundle", "fiber")


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(int(v.numerator), int(v.denominator))


def _poly(n: int, c) -> Polynomial:
    if isinstance(c, Polynomial):
        if c.n != n:
            raise ValueError(f"coefficient lives in {c.n} variables, expected {n}")
        return c
    return Polynomial.constant(n, c)


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class FlatModel:
    """Coordinates ``x_1..x_n`` with optional geometric structure.

    ``tangent=m`` marks the submanifold ``{x_{m+1} = … = x_n = 0}``;
    ``fiber=f`` makes the last ``f`` coordinates fiber coordinates of a
    projection; ``leaf=p`` is the foliation spanned by ``∂_1..∂_p``;
    ``rE``/``rF`` are the ranks of trivial bundles for the Hom-valued variant.
    """

    n: int
    tangent: int | None = None
    fiber: int = 0
    leaf: int | None = None
    rE: int = 0
    rF: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("the model needs at least one coordinate")
        if self.tangent is not None and not 0 <= self.tangent <= self.n:
            raise ValueError(f"tangent count {self.tangent} outside 0..{self.n}")
        if not 0 <= self.fiber < self.n:
            raise ValueError(f"fiber count {self.fiber} must leave at least one base coordinate")
        if self.leaf is not None and not 1 <= self.leaf <= self.n:
            raise ValueError(f"leaf dimension {self.leaf} outside 1..{self.n}")
        if self.rE < 0 or self.rF < 0 or (self.rE == 0) != (self.rF == 0):
            raise ValueError("bundle ranks must both be positive or both zero")

    @property
    def base(self) -> int:
        return self.n - self.fiber

    @property
    def normal(self) -> tuple[int, ...]:
        if self.tangent is None:
            raise ValueError("no submanifold configured")
        return tuple(range(self.tangent + 1, self.n + 1))

    def pull_back(self, f: Polynomial) -> Polynomial:
        """``pr^* f`` for a polynomial in the base coordinates."""
        if f.n != self.base:
            raise ValueError(f"base functions have {self.base} variables, got {f.n}")
        return f.reindex(self.n, list(range(1, self.base + 1)))


def monomials(n: int, d: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree ≤ d, in a fixed order."""
    out = []
    for deg in range(d + 1):
        for combo in combinations_with_replacement(range(n), deg):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


# ---------------------------------------------------------------------------
# symmetrized derivatives and insertion


@dataclass
class SymTensorForm:
    """A symmetric ``degree``-form stored by its values on sorted index multisets."""

    n: int
    degree: int
    values: dict[SymWord, Polynomial] = field(default_factory=dict)

    def __call__(self, *indices: int) -> Polynomial:
        if len(indices) != self.degree:
            raise ValueError(f"form of degree {self.degree} takes {self.degree} arguments")
        return self.values.get(tuple(sorted(indices)), Polynomial.zero(self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensorForm):
            return NotImplemented
        mine = {k: v for k, v in self.values.items() if v}
        theirs = {k: v for k, v in other.values.items() if v}
        return self.n == other.n and self.degree == other.degree and mine == theirs


@lru_cache(maxsize=200_000)
def _symd_value(f: Polynomial, word: SymWord) -> Polynomial:
    """``(D^r f)(∂_{w_1},…,∂_{w_r})`` through the flat recursion."""
    if not word:
        return f
    total = Polynomial.zero(f.n)
    for pos, letter in enumerate(word):
        rest = word[:pos] + word[pos + 1:]
        total = total + _symd_value(f, rest).partial(letter)
    return total


def sym_derivative(f: Polynomial, n: int) -> SymTensorForm:
    """``D^n f`` via ``(Dα)(X_0..X_n) = Σ_i ∂_{X_i} α(X_0,…,X̂_i,…,X_n)``."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    vals = {w: _symd_value(f, w) for w in combinations_with_replacement(range(1, f.n + 1), n)}
    return SymTensorForm(f.n, n, {w: v for w, v in vals.items() if v})


def _multiset_minus(big: SymWord, small: SymWord) -> SymWord | None:
    rest = list(big)
    for a in small:
        if a not in rest:
            return None
        rest.remove(a)
    return tuple(rest)


def insert(x, alpha):
    """Insertion of a symbol factor into a symmetric form.

    ``x`` is a SymWord, a ``(coefficient, SymWord)`` pair, or a tensor word
    with a tuple of forms for ``alpha``.  Inserting ``r`` vectors into a
    form of degree ``d`` gives a form of degree ``d − r`` (a polynomial when
    ``r = d``) and zero when ``r > d``.
    """
    if isinstance(alpha, tuple):
        word = x[1] if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], Polynomial) else x
        coef = x[0] if word is not x else None
        if len(word) != len(alpha):
            raise ValueError("need one form per tensor factor")
        out = None
        for w, a in zip(word, alpha):
            v = insert(w, a)
            if not isinstance(v, Polynomial):
                raise ValueError("multi-argument insertion needs full contractions")
            out = v if out is None else out * v
        if out is None:
            out = Polynomial.one(coef.n if coef is not None else 1)
        return out * coef if coef is not None else out
    coef = None
    word = x
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], Polynomial):
        coef, word = x
    word = tuple(sorted(word))
    r, d = len(word), alpha.degree
    if r > d:
        return Polynomial.zero(alpha.n)
    if r == d:
        val = alpha.values.get(word, Polynomial.zero(alpha.n))
        return val * coef if coef is not None else val
    out: dict = {}
    for key, val in alpha.values.items():
        rest = _multiset_minus(key, word)
        if rest is not None:
            out[rest] = val * coef if coef is not None else val
    return SymTensorForm(alpha.n, d - r, out)


def _prefactor(r: int) -> Fraction:
    if _faults.active("op_prefactor") and r >= 2:
        return Fraction(1)
    return Fraction(1, math.factorial(r))


def _op_factor(word: SymWord, f: Polynomial) -> Polynomial:
    """``(1/r!) ins(X) D^r f`` for one symmetric word ``X`` of degree ``r``."""
    if not word:
        return f
    return _symd_value(f, word) * _prefactor(len(word))


# ---------------------------------------------------------------------------
# symbols


def matrix_slot(a: int, rE: int) -> tuple[int, int]:
    """Module index ``a`` of the bundle variant ↦ matrix position ``(r, c)``."""
    return (a - 1) // rE + 1, (a - 1) % rE + 1


def matrix_index(r: int, c: int, rE: int) -> int:
    return (r - 1) * rE + c


@dataclass
class Symbol:
    """Polynomial-coefficient element of ``T Sym V`` (or of a variant's source space)."""

    model: FlatModel
    terms: dict
    variant: str = "scalar"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "bundle" and self.model.rE == 0:
            raise ValueError("bundle symbols need rE, rF > 0")
        n = self.model.n
        clean: dict = {}
        for lab, c in self.terms.items():
            p = _poly(n, c)
            clean[lab] = clean.get(lab, Polynomial.zero(n)) + p
        self.terms = {lab: c for lab, c in clean.items() if c}

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def grading(self) -> str:
        return TENSOR if self.variant == "scalar" else CA

    @classmethod
    def word(cls, model: FlatModel, label, coef=1, variant: str = "scalar") -> "Symbol":
        return cls(model, {label: coef}, variant)

    @classmethod
    def zero(cls, model: FlatModel, variant: str = "scalar") -> "Symbol":
        return cls(model, {}, variant)

    @classmethod
    def from_element(cls, model: FlatModel, x: Element, variant: str = "scalar") -> "Symbol":
        return cls(model, dict(x.terms), variant)

    def element(self) -> Element:
        return Element(self.grading, dict(self.terms))

    def tensor_degree(self, label) -> int:
        return len(label) if self.variant == "scalar" else len(label[0])

    def arity(self) -> int | None:
        degrees = {self.tensor_degree(lab) for lab in self.terms}
        if len(degrees) > 1:
            raise ValueError(f"inhomogeneous symbol with tensor degrees {sorted(degrees)}")
        return degrees.pop() if degrees else None

    def map_words(self, fn: Callable[[Any], Mapping]) -> "Symbol":
        """Apply a ℚ-linear label map, carrying the polynomial coefficients."""
        out: dict = {}
        zero = Polynomial.zero(self.n)
        for lab, c in self.terms.items():
            for new, v in fn(lab).items():
                out[new] = out.get(new, zero) + c * _as_fraction(v)
        return Symbol(self.model, out, self.variant)

    def __add__(self, other: "Symbol") -> "Symbol":
        self._check(other)
        out = dict(self.terms)
        for lab, c in other.terms.items():
            out[lab] = out[lab] + c if lab in out else c
        return Symbol(self.model, out, self.variant)

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + other.scale(-1)

    def __neg__(self) -> "Symbol":
        return self.scale(-1)

    def scale(self, c) -> "Symbol":
        c = _poly(self.n, c) if isinstance(c, Polynomial) else rational(c) if isinstance(c, str) else c
        return Symbol(self.model, {lab: v * c for lab, v in self.terms.items()}, self.variant)

    def _check(self, other: "Symbol") -> None:
        if other.n != self.n or other.variant != self.variant:
            raise ValueError("symbols live in different models")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Symbol):
            return NotImplemented
        return self.n == other.n and self.variant == other.variant and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def sorted_items(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))

    def __repr__(self) -> str:
        if not self.terms:
            return f"<{self.variant} symbol: 0>"
        body = " + ".join(f"({c})·{lab}" for lab, c in self.sorted_items())
        return f"<{self.variant} symbol: {body}>"

    # -- JSON ------------------------------------------------------------
    def to_json(self) -> dict:
        data = {
            "variant": self.variant,
            "n": self.n,
            "grading": self.grading,
            "terms": [[label_to_json(lab), c.to_json()] for lab, c in self.sorted_items()],
        }
        block = {}
        if self.variant == "bundle":
            block = {"rE": self.model.rE, "rF": self.model.rF}
        elif self.variant == "fiber":
            block = {"n_base": self.model.base, "n_fiber": self.model.fiber}
        if block:
            data["value_block"] = block
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "Symbol":
        try:
            variant = data.get("variant", "scalar")
            n = int(data["n"])
            block = data.get("value_block") or {}
            if variant == "bundle":
                model = FlatModel(n, rE=int(block["rE"]), rF=int(block["rF"]))
            elif variant == "fiber":
                model = FlatModel(n, fiber=int(block["n_fiber"]))
                if model.base != int(block.get("n_base", model.base)):
                    raise ValueError("n_base + n_fiber must equal n")
            else:
                model = FlatModel(n)
            terms: dict = {}
            for lab, c in data["terms"]:
                key = _parse_label(label_from_json(lab), variant)
                coef = _poly(n, scalar_from_json(c))
                terms[key] = terms[key] + coef if key in terms else coef
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValueError(f"malformed symbol JSON: {exc}") from exc
        sym = cls(model, terms, variant)
        for lab in sym.terms:
            _validate_label(lab, sym)
        return sym


def _parse_label(lab, variant: str):
    if variant == "scalar":
        return tuple(tuple(f) for f in lab)
    if variant == "bundle":
        X, (Y, a) = lab
        return tuple(tuple(f) for f in X), (tuple(Y), int(a))
    X, Y = lab
    return tuple(tuple(f) for f in X), tuple(Y)


def _validate_label(lab, s: Symbol) -> None:
    m = s.model
    if s.variant == "scalar":
        words, top = lab, m.n
    elif s.variant == "bundle":
        words, top = lab[0] + (lab[1][0],), m.n
        if not 1 <= lab[1][1] <= m.rE * m.rF:
            raise ValueError(f"matrix slot {lab[1][1]} out of range")
    else:
        X, Y = lab
        words, top = X, m.base
        if any(not 1 <= i <= m.n for i in Y):
            raise ValueError(f"fiber-block index out of range in {Y}")
    for w in words:
        if list(w) != sorted(w) or any(not 1 <= i <= top for i in w):
            raise ValueError(f"bad symmetric word {w}")


def symbol(model: FlatModel, *factors: Sequence[int], coef=1) -> Symbol:
    """The scalar symbol ``coef · X_1 ⊗ … ⊗ X_k`` from index lists."""
    return Symbol.word(model, tuple(tuple(sorted(f)) for f in factors), coef)


# ---------------------------------------------------------------------------
# operators


def _op_word(X: TensorWord, args: Sequence[Polynomial]) -> Polynomial:
    out = None
    for w, f in zip(X, args):
        v = _op_factor(w, f)
        if not v:
            return v
        out = v if out is None else out * v
    return out


def op_apply(s: Symbol, args: Sequence[Polynomial], extra=None):
    """Evaluate the operator of ``s`` on polynomial arguments.

    ``scalar``: returns a polynomial.  ``bundle``: ``extra`` is a section, a
    sequence of ``rE`` polynomials, and the value is a tuple of ``rF``
    polynomials.  ``fiber``: ``args`` are base polynomials (pulled back to P)
    and ``extra`` is a polynomial on P that the second block derives.
    """
    m = s.model
    k = s.arity()
    if k is not None and len(args) != k:
        raise ValueError(f"operator of arity {k} got {len(args)} arguments")
    if s.variant == "scalar":
        total = Polynomial.zero(m.n)
        for X, c in s.terms.items():
            v = _op_word(X, args) if X else Polynomial.one(m.n)
            if v:
                total = total + c * v
        return total
    if extra is None:
        raise ValueError(f"the {s.variant} variant needs an extra argument")
    if s.variant == "bundle":
        section = [_poly(m.n, g) for g in extra]
        if len(section) != m.rE:
            raise ValueError(f"section must have {m.rE} components")
        out = [Polynomial.zero(m.n) for _ in range(m.rF)]
        for (X, (Y, a)), c in s.terms.items():
            r, col = matrix_slot(a, m.rE)
            v = _op_factor(Y, section[col - 1])
            if X and v:
                v = v * _op_word(X, args)
            if v:
                out[r - 1] = out[r - 1] + c * v
        return tuple(out)
    pulled = [m.pull_back(f) for f in args]
    g = _poly(m.n, extra)
    total = Polynomial.zero(m.n)
    for (X, Y), c in s.terms.items():
        v = _op_factor(Y, g)
        if X and v:
            v = v * _op_word(X, pulled)
        if v:
            total = total + c * v
    return total


def op_closure(s: Symbol) -> Callable:
    """The operator of ``s`` as a plain callable ``D(args, extra=None)``."""
    return lambda args, extra=None: op_apply(s, args, extra)


def _value_add(a, b, sign: int = 1):
    if isinstance(a, tuple):
        return tuple(x + y * sign for x, y in zip(a, b))
    return a + b * sign


def _value_scale_left(u: Polynomial, v):
    if isinstance(v, tuple):
        return tuple(u * x for x in v)
    return u * v


def hochschild_delta_eval(D: Callable, k: int, args: Sequence[Polynomial], model: FlatModel | None = None,
                          variant: str = "scalar", extra=None, zero_cochain=None):
    """``(δD)(a_1,…,a_{k+1})`` for a ``k``-cochain ``D`` given by evaluation.

    The bimodule structure is the variant's: multiplication on both sides
    for scalars; for ``bundle`` the right action multiplies the section,
    for ``fiber`` it multiplies the function on P by the pulled-back
    argument.  A 0-cochain is passed as ``zero_cochain`` (its value).
    """
    if len(args) != k + 1:
        raise ValueError(f"δ of a {k}-cochain takes {k + 1} arguments, got {len(args)}")
    if variant == "fiber":
        lift = model.pull_back
    else:
        lift = lambda a: a

    def call(a, ex):
        if k == 0 and zero_cochain is not None:
            return zero_cochain
        return D(list(a), ex) if variant != "scalar" else D(list(a))

    def right(a):
        if variant == "bundle":
            return [a * g for g in extra]
        if variant == "fiber":
            return lift(a) * _poly(model.n, extra)
        return None

    total = _value_scale_left(lift(args[0]), call(args[1:], extra))
    for i in range(1, k + 1):
        merged = list(args[: i - 1]) + [args[i - 1] * args[i]] + list(args[i + 1:])
        total = _value_add(total, call(merged, extra), -1 if i % 2 else 1)
    last_sign = -1 if (k + 1) % 2 else 1
    if variant == "scalar":
        last = call(args[:k], None) * args[k]
    else:
        last = call(args[:k], right(args[k]))
    return _value_add(total, last, last_sign)


def delta_symbol(s: Symbol) -> Symbol:
    """The Hochschild differential on the symbol side.

    ``δ_ca`` for scalar symbols; ``δ_M`` with the coefficient comodule for
    the variants (regular on ``Sym V ⊗ Hom(E,F)``, base-projected regular on
    ``Sym TP``).
    """
    if s.variant == "scalar":
        return s.map_words(delta_ca_word)
    com = _variant_comodule(s.model, s.variant)
    return s.map_words(lambda lab: delta_M_label(lab, com))


def _variant_comodule(model: FlatModel, variant: str, degree: int = 8):
    if variant == "bundle":
        return make_comodule("sym_tensor_trivial", model.n, degree=degree,
                             module_rank=model.rE * model.rF, check=False)
    if variant == "fiber":
        return make_comodule("split", model.base, degree=degree, perp_rank=model.fiber, check=False)
    raise ValueError(f"no coefficient comodule for variant {variant!r}")


def cup_symbols(a: Symbol, b: Symbol) -> Symbol:
    """Concatenation of scalar symbols; its operator is the cup product."""
    if a.variant != "scalar" or b.variant != "scalar":
        raise ValueError("cup is defined on scalar symbols")
    out: dict = {}
    for X, c in a.terms.items():
        for Y, d in b.terms.items():
            out[X + Y] = out.get(X + Y, Polynomial.zero(a.n)) + c * d
    return Symbol(a.model, out)


def shuffle_symbol(model: FlatModel, word: SymWord) -> Symbol:
    """``Δ_sh`` of a symmetric word as a 2-symbol."""
    return Symbol(model, {(u, v): c for (u, v), c in sym_coproduct_word(tuple(word)).items()})


# ---------------------------------------------------------------------------
# HKR maps


def _multivector_terms(xi) -> tuple[int, dict]:
    if isinstance(xi, Element):
        return xi.terms
    return dict(xi)


def hkr(model: FlatModel, xi: Element) -> Symbol:
    """``hkr = Op ∘ VE⁻¹`` on multivector fields ``Σ c_ξ ξ`` (``ξ`` ExtWords)."""
    out: dict = {}
    zero = Polynomial.zero(model.n)
    for w, c in _multivector_terms(xi).items():
        c = _poly(model.n, c)
        for X, v in van_est_inverse_word(tuple(w)).items():
            out[X] = out.get(X, zero) + c * v
    return Symbol(model, out)


def hkr_inverse(s: Symbol) -> Element:
    """``VE`` on the symbol: the degree-1 parts of pure-V words, wedged."""
    if s.variant != "scalar":
        raise ValueError("hkr⁻¹ is defined on scalar symbols")
    out: dict = {}
    for X, c in s.terms.items():
        for w, v in van_est_word(X).items():
            out[w] = out.get(w, Polynomial.zero(s.n)) + c * v
    return Element(EXT, out)


def theta_nabla(s: Symbol) -> Symbol:
    """``Θ^∇ = Op ∘ Θ ∘ Op⁻¹``: the van Est homotopy on the symbol."""
    if s.variant != "scalar":
        raise ValueError("Θ^∇ is defined on scalar symbols")
    theta = plain(s.n).Theta
    return s.map_words(theta.on_label)


def multivector(model: FlatModel, terms: Mapping) -> Element:
    """``{ExtWord: coefficient}`` as an Element with polynomial coefficients."""
    return Element(EXT, {tuple(w): _poly(model.n, c) for w, c in terms.items()})


def lie_derivative_symbol(model: FlatModel, field_terms: Mapping[int, Any] | Element) -> Symbol:
    """The symbol ``X = Σ X^i ∂_i`` of ``Lie_X`` (a 1-cochain).

    ``field_terms`` is ``{i: X^i}`` or a degree-1 multivector field.
    """
    if isinstance(field_terms, Element):
        if any(len(w) != 1 for w in field_terms.terms):
            raise ValueError("Lie_X needs a vector field (degree-1 multivector)")
        field_terms = {w[0]: c for w, c in field_terms.terms.items()}
    return Symbol(model, {((i,),): _poly(model.n, c) for i, c in field_terms.items()})


def unit_symbol(model: FlatModel, k: int) -> Symbol:
    """``𝟙^{⊗k}``: for ``k = 1`` the identity, for ``k = 2`` the multiplication."""
    return Symbol.word(model, ((),) * k)


@dataclass
class Decomposition:
    """``x = hkr(hkr⁻¹x) + δΘ^∇x + Θ^∇δx`` with all pieces kept."""

    symbol: Symbol
    closedness: Symbol
    primitive: Symbol
    class_multivector: Element
    class_symbol: Symbol
    reconstruction: Symbol

    @property
    def closed(self) -> bool:
        return not self.closedness

    @property
    def exact_residual(self) -> bool:
        return not self.reconstruction


def decompose(s: Symbol) -> Decomposition:
    ds = delta_symbol(s)
    prim = theta_nabla(s)
    cls_mv = hkr_inverse(s)
    cls = hkr(s.model, cls_mv)
    residual = s - cls - delta_symbol(prim) - theta_nabla(ds)
    return Decomposition(s, ds, prim, cls_mv, cls, residual)


# ---------------------------------------------------------------------------
# tangential operators


def normal_count(word_or_words, normal: Sequence[int]) -> int:
    nset = set(normal)
    if word_or_words and isinstance(word_or_words[0], tuple):
        return sum(1 for f in word_or_words for i in f if i in nset)
    return sum(1 for i in word_or_words if i in nset)


def _normal_degree(e: Sequence[int], normal: Sequence[int]) -> int:
    return sum(e[i - 1] for i in normal)


def in_ideal_power(p: Polynomial, normal: Sequence[int], b: int) -> bool:
    """Is ``p`` in ``J^b`` for ``J = (x_i : i ∈ normal)``?  (Monomial ideal test.)"""
    return all(_normal_degree(e, normal) >= b for e in p.terms)


@dataclass
class TangentialResult:
    tangential: bool
    label: Any = None
    witness: dict | None = None

    def to_json(self) -> dict:
        return {"tangential": self.tangential, "label": label_to_json(self.label), "witness": self.witness}


def tangential_check(s: Symbol, m: int | None = None) -> TangentialResult:
    """Decide membership of ``s`` in ``T Sym Γ_C(TM)`` and find an evaluation witness.

    The tangential vector fields are spanned by ``∂_1..∂_m`` and ``x_j ∂_i``
    for normal ``i, j``, so a word with ``b`` normal letters needs its
    coefficient in ``J^b``.  On failure the witness is a tuple of monomial
    arguments, one of them in ``J``, on which the operator leaves ``J``.
    """
    model = s.model
    if m is None:
        if model.tangent is None:
            raise ValueError("model has no submanifold configured")
        m = model.tangent
    if s.variant != "scalar":
        raise ValueError("tangential check is defined on scalar symbols")
    normal = tuple(range(m + 1, model.n + 1))
    bad = None
    for X, c in s.sorted_items():
        if not in_ideal_power(c, normal, normal_count(X, normal)):
            bad = X
            break
    if bad is None:
        return TangentialResult(True)
    return TangentialResult(False, bad, _tangential_witness(s, bad, normal))


def _tangential_witness(s: Symbol, X: TensorWord, normal: Sequence[int]) -> dict | None:
    n = s.n
    k = len(X)
    # candidate arguments: x^X_i (possibly times one normal variable)
    def mono(word, extra=None):
        e = [0] * n
        for i in word:
            e[i - 1] += 1
        if extra:
            e[extra - 1] += 1
        return Polynomial.monomial(e)

    for slot in range(k):
        for extra in (None,) + tuple(normal):
            args = [mono(w) for w in X]
            args[slot] = mono(X[slot], extra)
            if not in_ideal_power(args[slot], normal, 1):
                continue
            val = op_apply(s, args)
            if not in_ideal_power(val, normal, 1):
                return {"slot": slot + 1, "args": [a.to_json() for a in args], "value": val.to_json()}
    return None


# ---------------------------------------------------------------------------
# symmetry actions


def permute_polynomial(f: Polynomial, perm: Sequence[int]) -> Polynomial:
    """``x_i ↦ x_{perm[i-1]}``."""
    return f.reindex(f.n, list(perm))


def permutation_action(model: FlatModel, perm: Sequence[int]) -> MorphismAlong:
    """Coordinate permutation acting on symbols (indices and coefficients together)."""
    if sorted(perm) != list(range(1, model.n + 1)):
        raise ValueError(f"{perm} is not a permutation of 1..{model.n}")
    return MorphismAlong.permutation(list(perm), theta=lambda c: permute_polynomial(c, perm),
                                     name=f"σ{tuple(perm)}")


def euler_field(f: Polynomial, weights: Sequence[Any]) -> Polynomial:
    """``E(f)`` for the diagonal field ``E = Σ w_i x_i ∂_i``."""
    out = Polynomial.zero(f.n)
    for e, c in f.terms.items():
        wt = sum(Fraction(w) * k for w, k in zip(weights, e))
        if wt:
            out = out + Polynomial.monomial(e, c * wt)
    return out


def diagonal_derivation(model: FlatModel, weights: Sequence[Any]) -> MorphismAlong:
    """Lie derivative along ``E = Σ w_i x_i ∂_i``: ``[E, ∂_i] = −w_i ∂_i``."""
    if len(weights) != model.n:
        raise ValueError("need one weight per coordinate")
    images = {i: {i: -Fraction(w)} for i, w in enumerate(weights, start=1) if w}
    return MorphismAlong(images, theta=lambda c: euler_field(c, weights), mode="derivation",
                         name=f"E{tuple(weights)}")


def act_symbol(a: MorphismAlong, s: Symbol) -> Symbol:
    pushed = a.push(s.element())
    return Symbol(s.model, dict(pushed.terms), s.variant)


def act_multivector(a: MorphismAlong, xi: Element) -> Element:
    return a.push(xi)


def _act_function(a: MorphismAlong, f: Polynomial) -> Polynomial:
    return a.theta(f)


def equivariance_reports(model: FlatModel, action: MorphismAlong, symbols: Sequence[Symbol],
                         multivectors: Sequence[Element], tuples: int = 5, seed: int = 0) -> list[Report]:
    """Check that Op, hkr, hkr⁻¹ and Θ^∇ commute with ``action``.

    For a derivation, "commute" means the Leibniz form
    ``E·Op(s)(f) = Op(E·s)(f) + Σ_i Op(s)(…, E f_i, …)``.
    """
    rng = random.Random(seed)
    deriv = action.mode == "derivation"
    reps = {name: Report(f"{name} commutes with {action.name}")
            for name in ("Op", "hkr", "hkr⁻¹", "Θ^∇")}
    for idx, s in enumerate(symbols):
        k = s.arity() or 0
        gs = act_symbol(action, s)
        for _ in range(tuples):
            args = [random_polynomial(rng, model.n, 2, 3) for _ in range(k)]
            if deriv:
                lhs = _act_function(action, op_apply(s, args))
                rhs = op_apply(gs, args)
                for i in range(k):
                    moved = list(args)
                    moved[i] = _act_function(action, args[i])
                    rhs = rhs + op_apply(s, moved)
            else:
                lhs = _act_function(action, op_apply(s, args))
                rhs = op_apply(gs, [_act_function(action, f) for f in args])
            reps["Op"].record(idx, {0: lhs}, {0: rhs})
        reps["hkr⁻¹"].record(idx, act_multivector(action, hkr_inverse(s)).terms, hkr_inverse(gs).terms)
        reps["Θ^∇"].record(idx, act_symbol(action, theta_nabla(s)).terms, theta_nabla(gs).terms)
    for idx, xi in enumerate(multivectors):
        reps["hkr"].record(idx, act_symbol(action, hkr(model, xi)).terms,
                           hkr(model, act_multivector(action, xi)).terms)
    return list(reps.values())


# ---------------------------------------------------------------------------
# model retracts on monomial-coefficient labels


def _extend(op: LinearOp, target: str) -> LinearOp:
    def act(label):
        e, lab = label
        return {(e, k): v for k, v in op.on_label(lab).items()}
    return LinearOp(act, degree=op.degree, target=target, name=op.name)


def _extend_complex(c: Complex, labels: list, name: str | None = None) -> Complex:
    grading = f"R⊗{c.grading}"
    return Complex(name or f"R⊗{c.name}", _extend(c.d, grading), lambda lab: c.degree(lab[1]),
                   grading=grading, window=lambda: labels)


def scalar_extension(r: HomotopyRetract, big_labels: list, small_labels: list, name: str = "") -> HomotopyRetract:
    """``R ⊗ r`` with labels ``(e, w)`` (monomial exponent, inner label)."""
    small = _extend_complex(r.small, small_labels)
    big = _extend_complex(r.big, big_labels)
    return HomotopyRetract(small, big, _extend(r.i, big.grading), _extend(r.p, small.grading),
                           _extend(r.h, big.grading), name=name or f"R⊗{r.name}")


def closure_report(name: str, op: LinearOp, labels: Iterable, inside: Callable[[Any], bool]) -> Report:
    """Every image of a window label stays inside the given subspace."""
    rep = Report(name)
    for lab in labels:
        img = op.on_label(lab)
        out = {k: v for k, v in img.items() if not inside(k)}
        rep.record(lab, out, {})
    return rep


@dataclass
class ModelInstance:
    """A configured model with its deformation retract and verification windows."""

    kind: str
    model: FlatModel
    retract: HomotopyRetract
    cohomology: str
    require: tuple[str, ...] = ("deformation",)
    big_inside: Callable[[Any], bool] | None = None
    small_inside: Callable[[Any], bool] | None = None
    element_checks: Callable[[], list[Report]] | None = None
    details: dict = field(default_factory=dict)

    def verify(self) -> list[Report]:
        rr: RetractReport = verify_retract(self.retract, require=self.require)
        reps = list(rr.reports)
        big = self.retract.big.basis()
        small = self.retract.small.basis()
        if self.big_inside is not None:
            for label, op in (("d", self.retract.big.d), ("h", self.retract.h)):
                reps.append(closure_report(f"{self.kind}: {label} preserves the subcomplex", op, big,
                                           self.big_inside))
            if self.small_inside is not None:
                reps.append(closure_report(f"{self.kind}: p lands in the small complex", self.retract.p,
                                           big, self.small_inside))
                reps.append(closure_report(f"{self.kind}: i lands in the subcomplex", self.retract.i,
                                           small, self.big_inside))
        if self.element_checks is not None:
            reps.extend(self.element_checks())
        return reps

    def ok(self) -> bool:
        return all(r.ok for r in self.verify())


def _hkr_retract_on(rank: int, k_max: int, s_max: int, l_max: int) -> HomotopyRetract:
    return VanEst(rank, window=Window(k_max=k_max, s_max=s_max, l_max=l_max)).retract


def _split_coefficient_retract(base: int, fiber: int, k_max: int, s_max: int, degree: int) -> HomotopyRetract:
    """``Sym(TP)``-coefficients with base coaction: cohomology ``Sym F`` in degree 0.

    The homotopy is ``δ⁻¹`` on the base part of the coefficient, with the
    vertical part carried along.
    """
    com = make_comodule("split", base, degree=degree, perp_rank=fiber)
    big = ca_complex_with(com, k_max, s_max)
    vert = [w for w in sym_basis_upto(base + fiber, degree) if all(i > base for i in w)]
    small = Complex("Sym F", LinearOp(lambda lab: {}, degree=1, name="0"), lambda lab: 0, grading="SymF",
                    window=lambda: vert)

    def pi(lab):
        X, phi = lab
        return {phi: 1} if not X and all(i > base for i in phi) else {}

    def h(lab):
        X, phi = lab
        if not X or any(i <= base for i in phi):
            return {}
        return {(X[:-1], tuple(sorted(X[-1] + phi))): (-1 if len(X) % 2 else 1)}

    return HomotopyRetract(small, big, LinearOp(lambda w: {((), w): 1}, target=CA, name="ι"),
                           LinearOp(pi, target="SymF", name="π"),
                           LinearOp(h, degree=-1, target=CA, name="δ⁻¹"), name="Sym(TP) coefficients")


def model_instantiate(kind: str, *, n: int = 2, m: int = 1, rE: int = 1, rF: int = 1, n_base: int = 1,
                      n_fiber: int = 1, leaf: int = 1, base_kind: str = "scalar",
                      perms: Sequence[Sequence[int]] = (), k_max: int = 2, s_max: int = 2,
                      l_max: int = 2, poly_deg: int = 1, coeff_degree: int | None = None) -> ModelInstance:
    """Build the deformation retract of one geometric instantiation on a window.

    Windows are tensor degree ≤ ``k_max``, factor degree ≤ ``s_max``,
    multivector degree ≤ ``l_max`` and coefficient monomials of degree ≤
    ``poly_deg`` (for the tangential model the coefficient degree is raised
    by the normal letter count so every spanning element fits).
    """
    if kind == "scalar":
        model = FlatModel(n)
        r = _hkr_retract_on(n, k_max, s_max, l_max)
        mons = monomials(n, poly_deg)
        big = [(e, X) for e in mons for X in r.big.basis()]
        small = [(e, w) for e in mons for w in r.small.basis()]
        return ModelInstance(kind, model, scalar_extension(r, big, small, "HKR"), "Λ Γ(TM)")

    if kind == "bundle":
        model = FlatModel(n, rE=rE, rF=rF)
        degree = coeff_degree if coeff_degree is not None else s_max * k_max + 1
        r = sym_tensor_trivial_retract(n, rE * rF, k_max, s_max, degree)
        mons = monomials(n, poly_deg)
        big = [(e, lab) for e in mons for lab in r.big.basis() if len(lab[1][0]) <= s_max]
        small = [(e, a) for e in mons for a in r.small.basis()]
        inst = scalar_extension(r, big, small, "HKR with Diffop(E;F) values")
        return ModelInstance(kind, model, inst, "Γ(Hom(E,F)) in degree 0",
                             details={"degree0_basis": [matrix_slot(a, rE) for a in r.small.basis()]})

    if kind == "submanifold":
        model = FlatModel(n, tangent=m)
        normal = model.normal
        r = _hkr_retract_on(n, k_max, s_max, l_max)
        top = poly_deg + k_max * s_max
        mons = monomials(n, top)

        def ok_word(e, X):
            need = normal_count(X, normal)
            return _normal_degree(e, normal) >= need and sum(e) - need <= poly_deg

        def ok_ext(e, w):
            need = normal_count(w, normal)
            return _normal_degree(e, normal) >= need and sum(e) - need <= poly_deg

        big = [(e, X) for e in mons for X in r.big.basis() if ok_word(e, X)]
        small = [(e, w) for e in mons for w in r.small.basis() if ok_ext(e, w)]
        inst = scalar_extension(r, big, small, "tangential HKR")

        def inside_big(lab):
            e, X = lab
            return _normal_degree(e, normal) >= normal_count(X, normal)

        return ModelInstance(kind, model, inst, "Λ Γ_C(TM)", big_inside=inside_big, small_inside=inside_big,
                             details={"spanning": ["∂_%d" % i for i in range(1, m + 1)]
                                      + [f"x_{j}∂_{i}" for i in normal for j in normal]})

    if kind == "submersion":
        model = FlatModel(n_base + n_fiber, fiber=n_fiber)
        degree = coeff_degree if coeff_degree is not None else s_max * k_max + 1
        r = _split_coefficient_retract(n_base, n_fiber, k_max, s_max, degree)
        mons = monomials(model.n, poly_deg)
        big = [(e, lab) for e in mons for lab in r.big.basis() if len(lab[1]) <= s_max]
        small = [(e, w) for e in mons for w in r.small.basis() if len(w) <= s_max]
        inst = scalar_extension(r, big, small, "HKR with Diffop(P) values")
        return ModelInstance(kind, model, inst, "Diffop_ver(P) ≅ Sym Γ(F) in degree 0")

    if kind == "foliation":
        model = FlatModel(n, leaf=leaf)
        r = _hkr_retract_on(leaf, k_max, s_max, min(l_max, leaf))
        mons = monomials(n, poly_deg)
        big = [(e, X) for e in mons for X in r.big.basis()]
        small = [(e, w) for e in mons for w in r.small.basis()]
        inst = scalar_extension(r, big, small, "foliation HKR")

        def along_leaf(lab):
            e, w = lab
            return all(i <= leaf for i in (w if w and not isinstance(w[0], tuple) else
                                           [i for f in w for i in f]))

        return ModelInstance(kind, model, inst, "Λ Γ(D)", big_inside=along_leaf, small_inside=along_leaf)

    if kind == "projectable":
        model = FlatModel(n_base + n_fiber, fiber=n_fiber)
        N, b = model.n, n_base
        r_p = _hkr_retract_on(N, k_max, s_max, l_max)
        mons_p = monomials(N, poly_deg)

        def has_fiber(w) -> bool:
            flat = [i for f in w for i in f] if w and isinstance(w[0], tuple) else list(w)
            return any(i > b for i in flat)

        big0 = [(e, X) for e in mons_p for X in r_p.big.basis() if has_fiber(X)]
        small0 = [(e, w) for e in mons_p for w in r_p.small.basis() if has_fiber(w)]
        part0 = scalar_extension(r_p, big0, small0, "HC(P)_0")
        r_m = _hkr_retract_on(b, k_max, s_max, l_max)
        mons_m = monomials(b, poly_deg)
        big1 = [(e, X) for e in mons_m for X in r_m.big.basis()]
        small1 = [(e, w) for e in mons_m for w in r_m.small.basis()]
        part1 = scalar_extension(r_m, big1, small1, "HC(M)")
        total = direct_sum(part0, part1, name="projectable HKR")

        def inside(lab):
            tag, (e, w) = lab
            return has_fiber(w) if tag == 0 else True

        return ModelInstance(kind, model, total, "Λ^{•-1} Γ(TP) ∧ Γ(F) ⊕ Λ Γ(F^⊥)^F",
                             big_inside=inside, small_inside=inside)

    if kind == "invariant":
        if base_kind != "scalar":
            raise ValueError("invariant instantiation is implemented over the scalar model")
        inst = model_instantiate("scalar", n=n, k_max=k_max, s_max=s_max, l_max=l_max, poly_deg=poly_deg)
        model = inst.model
        actions = [permutation_action(model, p) for p in perms]
        if not actions:
            raise ValueError("the invariant model needs at least one permutation")
        group = _generated_group(n, [tuple(p) for p in perms])
        inst.kind = "invariant"
        inst.cohomology = "Λ Γ(TM)^G"
        inst.element_checks = lambda: _invariant_checks(inst.retract, group, n)
        inst.details = {"group_order": len(group)}
        return inst

    raise ValueError(f"unknown model kind {kind!r}")


def _generated_group(n: int, gens: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    ident = tuple(range(1, n + 1))
    group = {ident}
    frontier = [ident]
    while frontier:
        g = frontier.pop()
        for s in gens:
            h = tuple(s[g[i] - 1] for i in range(n))
            if h not in group:
                group.add(h)
                frontier.append(h)
    return sorted(group)


def _permute_label(lab, perm: Sequence[int]):
    """Permutation on an extended label ``(e, w)``; returns ``(sign, label)``."""
    e, w = lab
    ne = [0] * len(e)
    for i, k in enumerate(e):
        ne[perm[i] - 1] += k
    if w and isinstance(w[0], tuple):
        return 1, (tuple(ne), tuple(tuple(sorted(perm[i - 1] for i in f)) for f in w))
    from .graded_algebra import ext_normalize

    s, word = ext_normalize([perm[i - 1] for i in w])
    return s, (tuple(ne), word)


def _reynolds(lab, group, scalar_tag=False) -> dict:
    out: dict = {}
    for g in group:
        s, new = _permute_label(lab, g)
        if s:
            out[new] = out.get(new, 0) + Fraction(s, len(group))
    return {k: v for k, v in out.items() if v}


def _invariant_checks(r: HomotopyRetract, group, n: int) -> list[Report]:
    """The retract identities on the Reynolds-averaged (invariant) spanning elements."""
    big, small = r.big.basis(), r.small.basis()
    seen, big_inv = set(), []
    for lab in big:
        v = _reynolds(lab, group)
        key = frozenset(v.items())
        if v and key not in seen:
            seen.add(key)
            big_inv.append((lab, v))
    seen, small_inv = set(), []
    for lab in small:
        v = _reynolds(lab, group)
        key = frozenset(v.items())
        if v and key not in seen:
            seen.add(key)
            small_inv.append((lab, v))
    d, h, i, p = r.big.d, r.h, r.i, r.p
    rep_h = Report("invariant: h d + d h = id - i p on invariants")
    rep_inv = Report("invariant: h, d and i p preserve invariants")
    rep_pi = Report("invariant: p i = id on invariants")

    def is_invariant(terms: Mapping) -> bool:
        for g in group:
            moved: dict = {}
            for lab, c in terms.items():
                s, new = _permute_label(lab, g)
                if s:
                    moved[new] = moved.get(new, 0) + s * c
            if {k: v for k, v in moved.items() if v} != {k: v for k, v in terms.items() if v}:
                return False
        return True

    for lab, v in big_inv:
        hv = h.apply_dict(v)
        lhs = dict(d.apply_dict(hv))
        for key, c in h.apply_dict(d.apply_dict(v)).items():
            lhs[key] = lhs.get(key, 0) + c
        ipv = i.apply_dict(p.apply_dict(v))
        rhs = dict(v)
        for key, c in ipv.items():
            rhs[key] = rhs.get(key, 0) - c
        rep_h.record(lab, lhs, rhs)
        for img in (hv, d.apply_dict(v), ipv):
            rep_inv.record(lab, {} if is_invariant(img) else {"not invariant": 1}, {})
    for lab, v in small_inv:
        rep_pi.record(lab, p.apply_dict(i.apply_dict(v)), v)
    return [rep_h, rep_inv, rep_pi]

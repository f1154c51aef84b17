"""Free graded modules over a finite basis: Sym V, Lambda V and T Sym V.

Basis labels are plain tuples so they hash fast and sort canonically:

* a ``SymWord`` is a non-decreasing tuple of basis indices (``()`` is the unit),
* an ``ExtWord`` is a strictly increasing tuple (``()`` is 1),
* a ``TensorWord`` is a tuple of SymWords (``()`` is the unit of T Sym V).

Basis indices are 1-based.  Symmetric words never carry signs; every Koszul
sign in the package comes out of :func:`ext_normalize`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .scalars import Polynomial, Scalar, scalar_from_json, scalar_to_json

SymWord = tuple[int, ...]
ExtWord = tuple[int, ...]
TensorWord = tuple[SymWord, ...]
Label = Hashable

SYM = "sym"
EXT = "ext"
SYM2 = "sym⊗sym"
EXT2 = "ext⊗ext"
TENSOR = "tensor"

UNIT: SymWord = ()


# ---------------------------------------------------------------------------
# words and bases


def sym_word(indices: Iterable[int]) -> SymWord:
    return tuple(sorted(indices))


def ext_normalize(indices: Sequence[int]) -> tuple[int, ExtWord]:
    """Sort ``indices`` and return ``(sign, word)``; sign is 0 on a repeated index."""
    seq = list(indices)
    if len(set(seq)) != len(seq):
        return 0, ()
    # count inversions; words are short so the quadratic loop is fine
    inv = 0
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                inv += 1
    return (-1 if inv % 2 else 1), tuple(sorted(seq))


def sym_basis(d: int, r: int) -> list[SymWord]:
    return list(combinations_with_replacement(range(1, d + 1), r))


def sym_basis_upto(d: int, r_max: int, r_min: int = 0) -> list[SymWord]:
    return [w for r in range(r_min, r_max + 1) for w in sym_basis(d, r)]


def ext_basis(d: int, l: int) -> list[ExtWord]:
    return list(combinations(range(1, d + 1), l))


def ext_basis_upto(d: int, l_max: int) -> list[ExtWord]:
    return [w for l in range(l_max + 1) for w in ext_basis(d, l)]


def tensor_basis(d: int, k: int, max_sym: int, min_sym: int = 0) -> Iterator[TensorWord]:
    """All tensor words of length ``k`` whose factors have degree in ``[min_sym, max_sym]``."""
    factors = sym_basis_upto(d, max_sym, min_sym)
    return product(factors, repeat=k)


def tensor_basis_upto(d: int, k_max: int, max_sym: int, min_sym: int = 0) -> Iterator[TensorWord]:
    for k in range(k_max + 1):
        yield from tensor_basis(d, k, max_sym, min_sym)


# ---------------------------------------------------------------------------
# elements


def _clean(terms: Mapping) -> dict:
    return {lab: c for lab, c in terms.items() if c}


def accumulate(out: dict, terms: Mapping, coef: Any = 1) -> None:
    """``out += coef * terms`` in place (zeros are pruned later)."""
    if coef == 1:
        for lab, c in terms.items():
            out[lab] = out.get(lab, 0) + c
    else:
        for lab, c in terms.items():
            out[lab] = out.get(lab, 0) + coef * c


class Element:
    """A finite linear combination of basis labels inside one graded module."""

    __slots__ = ("grading", "terms")

    def __init__(self, grading: str, terms: Mapping[Label, Scalar] | None = None):
        self.grading = grading
        self.terms: dict[Label, Scalar] = _clean(terms) if terms else {}

    @classmethod
    def basis(cls, grading: str, label: Label, coef: Scalar = 1) -> "Element":
        return cls(grading, {label: coef})

    @classmethod
    def zero(cls, grading: str) -> "Element":
        return cls(grading)

    # container protocol
    def __iter__(self):
        return iter(self.terms.items())

    def items(self):
        return self.terms.items()

    def labels(self):
        return self.terms.keys()

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def coefficient(self, label: Label) -> Scalar:
        return self.terms.get(label, 0)

    # arithmetic
    def _check(self, other: "Element") -> None:
        if not isinstance(other, Element):
            raise TypeError(f"expected an Element, got {type(other).__name__}")
        if other.grading != self.grading and self.terms and other.terms:
            raise ValueError(f"grading mismatch: {self.grading} vs {other.grading}")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        out = dict(self.terms)
        accumulate(out, other.terms)
        return Element(self.grading if self.terms else other.grading, out)

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        out = dict(self.terms)
        accumulate(out, other.terms, -1)
        return Element(self.grading if self.terms else other.grading, out)

    def __neg__(self) -> "Element":
        return Element(self.grading, {k: -c for k, c in self.terms.items()})

    def scale(self, c: Scalar) -> "Element":
        return Element(self.grading, {k: c * v for k, v in self.terms.items()})

    def __rmul__(self, c: Scalar) -> "Element":
        if isinstance(c, Element):
            return NotImplemented
        return self.scale(c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        if not self.terms and not other.terms:
            return True
        return self.grading == other.grading and self.terms == other.terms

    def __hash__(self):  # pragma: no cover - elements are mutable-looking values
        raise TypeError("Element is unhashable")

    def map_labels(self, fn: Callable[[Label], Mapping], grading: str) -> "Element":
        """Linear extension of ``fn`` (label -> dict of label -> scalar)."""
        out: dict = {}
        for lab, c in self.terms.items():
            accumulate(out, fn(lab), c)
        return Element(grading, out)

    def sorted_items(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: _sort_key(kv[0]))

    def __repr__(self) -> str:
        if not self.terms:
            return f"<{self.grading}: 0>"
        body = " + ".join(f"({c})·{lab}" for lab, c in self.sorted_items())
        return f"<{self.grading}: {body}>"

    def to_json(self) -> dict:
        return {
            "grading": self.grading,
            "terms": [[label_to_json(lab), scalar_to_json(c)] for lab, c in self.sorted_items()],
        }

    @classmethod
    def from_json(cls, data: Mapping, label_parser: Callable[[Any], Label] | None = None) -> "Element":
        parse = label_parser or label_from_json
        try:
            grading = data["grading"]
            terms: dict = {}
            for lab, c in data["terms"]:
                key = parse(lab)
                terms[key] = terms.get(key, 0) + scalar_from_json(c)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed element JSON: {exc}") from exc
        return cls(grading, terms)


def _sort_key(label):
    """A total order on heterogeneous nested labels (None < numbers < strings < tuples)."""
    if label is None:
        return (0,)
    if isinstance(label, (int, Fraction)):
        return (1, label)
    if isinstance(label, str):
        return (2, label)
    if isinstance(label, tuple):
        return (3, len(label), tuple(_sort_key(x) for x in label))
    return (4, repr(label))


def label_to_json(label):
    if isinstance(label, tuple):
        return [label_to_json(x) for x in label]
    return label


def label_from_json(data):
    if isinstance(data, list):
        return tuple(label_from_json(x) for x in data)
    return data


def same_terms(a: Element, b: Element) -> bool:
    """Exact equality of coefficient maps, ignoring grading tags."""
    return a.terms == b.terms


# ---------------------------------------------------------------------------
# products


def _sym_mul_words(a: SymWord, b: SymWord) -> SymWord:
    return tuple(sorted(a + b))


def _ext_mul_words(a: ExtWord, b: ExtWord) -> tuple[int, ExtWord]:
    return ext_normalize(a + b)


def sym_mul(a: Element, b: Element) -> Element:
    """Symmetric product; bilinear extension of multiset union."""
    _expect(a, SYM)
    _expect(b, SYM)
    out: dict = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = _sym_mul_words(wa, wb)
            out[w] = out.get(w, 0) + ca * cb
    return Element(SYM, out)


def ext_mul(a: Element, b: Element) -> Element:
    """Exterior product with the Koszul sign of the sorting permutation."""
    _expect(a, EXT)
    _expect(b, EXT)
    out: dict = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            s, w = _ext_mul_words(wa, wb)
            if s:
                out[w] = out.get(w, 0) + s * ca * cb
    return Element(EXT, out)


def _expect(x: Element, grading: str) -> None:
    if x.terms and x.grading != grading:
        raise ValueError(f"expected an element of {grading}, got {x.grading}")


# ---------------------------------------------------------------------------
# coproducts


@lru_cache(maxsize=None)
def sym_coproduct_word(word: SymWord) -> dict[tuple[SymWord, SymWord], int]:
    """Shuffle coproduct of one symmetric word, as ``{(left, right): multiplicity}``."""
    r = len(word)
    out: dict[tuple[SymWord, SymWord], int] = {}
    positions = range(r)
    for i in range(r + 1):
        for chosen in combinations(positions, i):
            cs = set(chosen)
            left = tuple(word[p] for p in chosen)
            right = tuple(word[p] for p in positions if p not in cs)
            key = (left, right)
            out[key] = out.get(key, 0) + 1
    return out


@lru_cache(maxsize=None)
def ext_coproduct_word(word: ExtWord) -> dict[tuple[ExtWord, ExtWord], int]:
    """Signed shuffle coproduct of one exterior word."""
    r = len(word)
    out: dict[tuple[ExtWord, ExtWord], int] = {}
    positions = range(r)
    for i in range(r + 1):
        for chosen in combinations(positions, i):
            cs = set(chosen)
            # parity of the (i, r-i)-shuffle putting ``chosen`` first
            inversions = sum(p - j for j, p in enumerate(chosen))
            left = tuple(word[p] for p in chosen)
            right = tuple(word[p] for p in positions if p not in cs)
            out[(left, right)] = -1 if inversions % 2 else 1
    return out


@lru_cache(maxsize=None)
def sym_reduced_coproduct_word(word: SymWord) -> dict[tuple[SymWord, SymWord], int]:
    out = dict(sym_coproduct_word(word))
    for key in ((UNIT, word), (word, UNIT)):
        out[key] = out.get(key, 0) - 1
    return {k: v for k, v in out.items() if v}


def shuffle_coproduct(a: Element, algebra: str | None = None) -> Element:
    """Shuffle coproduct on Sym V (``algebra="sym"``) or Lambda V (``"ext"``)."""
    algebra = algebra or a.grading
    if algebra == SYM:
        _expect(a, SYM)
        return a.map_labels(sym_coproduct_word, SYM2)
    if algebra == EXT:
        _expect(a, EXT)
        return a.map_labels(ext_coproduct_word, EXT2)
    raise ValueError(f"no shuffle coproduct on {algebra!r}")


def reduced_coproduct(a: Element) -> Element:
    _expect(a, SYM)
    return a.map_labels(sym_reduced_coproduct_word, SYM2)


def iterated_coproduct_word(word: tuple[int, ...], parts: int, algebra: str = SYM) -> dict:
    """``Delta^(parts-1)`` of one word as ``{(w_1, ..., w_parts): coefficient}``."""
    if parts < 1:
        raise ValueError("need at least one tensor factor")
    table = sym_coproduct_word if algebra == SYM else ext_coproduct_word
    current: dict = {(tuple(word),): 1}
    for _ in range(parts - 1):
        nxt: dict = {}
        for key, c in current.items():
            # split the last factor; moving it past nothing keeps the sign
            for (l, r), s in table(key[-1]).items():
                nk = key[:-1] + (l, r)
                nxt[nk] = nxt.get(nk, 0) + c * s
        current = {k: v for k, v in nxt.items() if v}
    return current


# ---------------------------------------------------------------------------
# antipode, counit, projections


def antipode(a: Element) -> Element:
    if a.grading not in (SYM, EXT) and a.terms:
        raise ValueError(f"antipode is defined on Sym V and Lambda V, not {a.grading}")
    return Element(a.grading, {w: (-c if len(w) % 2 else c) for w, c in a.items()})


def counit(a: Element) -> Scalar:
    if a.grading not in (SYM, EXT) and a.terms:
        raise ValueError(f"counit is defined on Sym V and Lambda V, not {a.grading}")
    return a.coefficient(())


def project(a: Element, selector) -> Element | Scalar:
    """Degree projections.

    ``selector`` is one of ``"counit"``, ``"pr_V"``, ``"pr_plus"``,
    ``("pr_sym", r)`` or ``("pr_ext", l)``.  The counit returns a scalar.
    """
    if a.grading not in (SYM, EXT) and a.terms:
        raise ValueError(f"no degree projections on {a.grading}")
    if selector in ("counit", "eps"):
        return counit(a)
    if selector == "pr_V":
        keep = lambda w: len(w) == 1
    elif selector == "pr_plus":
        keep = lambda w: len(w) > 0
    elif isinstance(selector, tuple) and len(selector) == 2 and selector[0] in ("pr_sym", "pr_ext"):
        kind, deg = selector
        want = SYM if kind == "pr_sym" else EXT
        if a.terms and a.grading != want:
            raise ValueError(f"{kind} does not apply to an element of {a.grading}")
        keep = lambda w: len(w) == deg
    else:
        raise ValueError(f"unknown projection selector {selector!r}")
    return Element(a.grading, {w: c for w, c in a.items() if keep(w)})


def sweedler_projection(a: Element, degree: int) -> Element:
    """``(1/r!) pr_V(a_(1)) . ... . pr_V(a_(r))`` computed from the iterated coproduct.

    On Sym V the product is the symmetric one, on Lambda V the exterior one;
    either way the result should be the degree-``r`` part of ``a``.
    """
    algebra = a.grading
    if algebra not in (SYM, EXT):
        raise ValueError("the Sweedler projection needs Sym V or Lambda V")
    if degree == 0:
        return Element(algebra, {(): counit(a)})
    out: dict = {}
    fact = Fraction(1, math.factorial(degree))
    for w, c in a.items():
        for parts, s in iterated_coproduct_word(w, degree, algebra).items():
            if any(len(p) != 1 for p in parts):
                continue
            letters = [p[0] for p in parts]
            if algebra == SYM:
                sign, res = 1, tuple(sorted(letters))
            else:
                sign, res = ext_normalize(letters)
            if sign:
                out[res] = out.get(res, 0) + fact * sign * s * c
    return Element(algebra, out)


def tensor_square_product(a: Element, b: Element, algebra: str) -> Element:
    """Componentwise product on the tensor square, signed for Lambda V."""
    grading = SYM2 if algebra == SYM else EXT2
    out: dict = {}
    for (a1, a2), ca in a.items():
        for (b1, b2), cb in b.items():
            if algebra == SYM:
                key, sign = (_sym_mul_words(a1, b1), _sym_mul_words(a2, b2)), 1
            else:
                s1, w1 = ext_normalize(a1 + b1)
                s2, w2 = ext_normalize(a2 + b2)
                sign = s1 * s2 * (-1 if len(a2) * len(b1) % 2 else 1)
                key = (w1, w2)
            if sign:
                out[key] = out.get(key, 0) + sign * ca * cb
    return Element(grading, out)


def flip(a: Element) -> Element:
    """Tensor flip on a tensor square, with the Koszul sign in the exterior case."""
    out: dict = {}
    for (x, y), c in a.items():
        sign = -1 if a.grading == EXT2 and len(x) * len(y) % 2 else 1
        out[(y, x)] = out.get((y, x), 0) + sign * c
    return Element(a.grading, out)


def apply_left(a: Element, fn: Callable[[Label], Mapping]) -> Element:
    """Apply a label map to the left factor of a two-fold tensor."""
    out: dict = {}
    for (x, y), c in a.items():
        for x2, c2 in fn(x).items():
            key = (x2, y)
            out[key] = out.get(key, 0) + c * c2
    return Element(a.grading, out)


# small constructors used all over the tests and examples
def sym(*indices: int, coef: Scalar = 1) -> Element:
    return Element.basis(SYM, sym_word(indices), coef)


def ext(*indices: int, coef: Scalar = 1) -> Element:
    s, w = ext_normalize(indices)
    return Element(EXT, {w: s * coef} if s else {})


def tensor(*factors: Sequence[int], coef: Scalar = 1) -> Element:
    return Element.basis(TENSOR, tuple(sym_word(f) for f in factors), coef)

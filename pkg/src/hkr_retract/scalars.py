"""Exact scalars: rationals and sparse multivariate polynomials over the rationals.

Rationals are plain :class:`fractions.Fraction` values.  Polynomials live in
``Q[x_1, ..., x_n]`` and are stored as a map from exponent tuples to nonzero
fractions.  Variable indices are 1-based throughout the package so that
``x_i`` pairs with the coordinate vector field ``d_i``.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rational = Fraction
Number = Union[int, Fraction]


def rational(value: Union[Number, str]) -> Fraction:
    """Parse ``"num/den"`` (or an int / Fraction) into a normalized Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read a rational from {value!r}")


def rational_to_json(value: Number) -> str:
    q = Fraction(value)
    return f"{q.numerator}/{q.denominator}"


class Polynomial:
    """Immutable sparse polynomial in ``n`` variables with rational coefficients."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Sequence[int], Number] | None = None):
        if n < 1:
            raise ValueError("a polynomial needs at least one variable")
        self.n = n
        clean: dict[tuple[int, ...], Fraction] = {}
        if terms:
            for exp, coef in terms.items():
                exp = tuple(exp)
                if len(exp) != n:
                    raise ValueError(f"exponent {exp} does not have length {n}")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                if coef:
                    clean[exp] = clean.get(exp, Fraction(0)) + Fraction(coef)
            clean = {e: c for e, c in clean.items() if c}
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, n: int, terms: dict) -> "Polynomial":
        # trusted constructor: terms already canonical
        p = object.__new__(cls)
        p.n = n
        p._terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c: Number) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def one(cls, n: int) -> "Polynomial":
        return cls.constant(n, 1)

    @classmethod
    def variable(cls, n: int, i: int) -> "Polynomial":
        """The coordinate ``x_i`` (1-based)."""
        if not 1 <= i <= n:
            raise IndexError(f"variable index {i} out of range 1..{n}")
        exp = [0] * n
        exp[i - 1] = 1
        return cls(n, {tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Sequence[int], coef: Number = 1) -> "Polynomial":
        return cls(len(exp), {tuple(exp): coef})

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def items(self):
        """Terms in canonical (lexicographic exponent) order."""
        return sorted(self._terms.items())

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.n, Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, variables: Iterable[int]) -> int:
        """Smallest total degree in the given (1-based) variables over all terms."""
        idx = [v - 1 for v in variables]
        return min((sum(e[i] for i in idx) for e in self._terms), default=10**9)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValueError(f"variable-count mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Polynomial.constant(self.n, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for e, c in o._terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.n, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if not other:
                return Polynomial._raw(self.n, {})
            return Polynomial._raw(self.n, {e: c * other for e, c in self._terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in o._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw(self.n, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.one(self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.n == other.n and self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if not other:
                return not self._terms
            return self._terms == {(0,) * self.n: Fraction(other)}
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and evaluation --------------------------------------
    def partial(self, i: int) -> "Polynomial":
        if not 1 <= i <= self.n:
            raise IndexError(f"variable index {i} out of range 1..{self.n}")
        k = i - 1
        out = {}
        for e, c in self._terms.items():
            if e[k]:
                e2 = e[:k] + (e[k] - 1,) + e[k + 1:]
                out[e2] = c * e[k]
        return Polynomial._raw(self.n, out)

    def evaluate(self, point: Sequence[Number]) -> Fraction:
        if len(point) != self.n:
            raise ValueError(f"point has length {len(point)}, expected {self.n}")
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self._terms.items():
            term = c
            for v, k in zip(pt, e):
                if k:
                    term *= v ** k
            total += term
        return total

    def reindex(self, n_new: int, positions: Sequence[int]) -> "Polynomial":
        """Pull back along a coordinate map: variable ``i`` becomes variable ``positions[i-1]``.

        Used for pull-backs along coordinate projections (a base polynomial
        viewed on a product) and for permutation actions.
        """
        if len(positions) != self.n:
            raise ValueError("need one target position per variable")
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self._terms.items():
            ne = [0] * n_new
            for k, p in zip(e, positions):
                ne[p - 1] += k
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c
        return Polynomial(n_new, out)

    def restrict(self, keep: Sequence[int]) -> "Polynomial":
        """Set every variable not in ``keep`` to zero and renumber the survivors 1..len(keep)."""
        keep_idx = [k - 1 for k in keep]
        drop = [i for i in range(self.n) if i not in keep_idx]
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self._terms.items():
            if any(e[i] for i in drop):
                continue
            ne = tuple(e[i] for i in keep_idx)
            out[ne] = out.get(ne, 0) + c
        return Polynomial(len(keep), out)

    # -- printing / serialization -------------------------------------
    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}" for i, k in enumerate(e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [{"exp": list(e), "coef": rational_to_json(c)} for e, c in self.items()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        try:
            n = int(data["n"])
            terms = {}
            for t in data["terms"]:
                e = tuple(int(k) for k in t["exp"])
                terms[e] = terms.get(e, 0) + rational(t["coef"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed polynomial JSON: {exc}") from exc
        return cls(n, terms)


Scalar = Union[int, Fraction, Polynomial]


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.n != b.n:
        raise ValueError(f"variable-count mismatch: {a.n} vs {b.n}")
    return a * b


def poly_partial(p: Polynomial, i: int) -> Polynomial:
    """Exact partial derivative with respect to ``x_i``, ``1 <= i <= n``."""
    return p.partial(i)


def poly_eval(p: Polynomial, point: Sequence[Number]) -> Fraction:
    return p.evaluate(point)


def scalar_to_json(c: Scalar):
    if isinstance(c, Polynomial):
        return c.to_json()
    return rational_to_json(c)


def scalar_from_json(data) -> Scalar:
    if isinstance(data, Mapping):
        return Polynomial.from_json(data)
    return rational(data)


def random_rational(rng: random.Random, bound: int = 5) -> Fraction:
    den = rng.randint(1, bound)
    return Fraction(rng.randint(-bound, bound), den)


def random_polynomial(
    rng: random.Random, n: int, max_degree: int = 3, n_terms: int = 4, bound: int = 5
) -> Polynomial:
    """A random polynomial of total degree at most ``max_degree``."""
    terms: dict[tuple[int, ...], Fraction] = {}
    for _ in range(n_terms):
        budget = rng.randint(0, max_degree)
        exp = [0] * n
        for _ in range(budget):
            exp[rng.randrange(n)] += 1
        e = tuple(exp)
        terms[e] = terms.get(e, 0) + random_rational(rng, bound)
    return Polynomial(n, terms)

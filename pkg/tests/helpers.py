"""Strategies shared by the property tests."""

from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from hkr_retract.scalars import Polynomial

small_fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def polynomials(n: int, max_degree: int = 3, max_terms: int = 4):
    exps = st.tuples(*[st.integers(0, max_degree) for _ in range(n)]).filter(lambda e: sum(e) <= max_degree)
    return st.dictionaries(exps, small_fractions, max_size=max_terms).map(lambda t: Polynomial(n, t))


def points(n: int):
    return st.tuples(*[small_fractions for _ in range(n)])


def sym_words(n: int, max_len: int = 3):
    return st.lists(st.integers(1, n), max_size=max_len).map(lambda w: tuple(sorted(w)))


def tensor_words(n: int, max_k: int = 2, max_len: int = 2):
    return st.lists(sym_words(n, max_len), max_size=max_k).map(tuple)


__all__ = ["Fraction", "polynomials", "points", "sym_words", "tensor_words", "small_fractions"]

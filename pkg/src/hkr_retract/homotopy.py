"""Cochain complexes, homotopy retracts and the homological perturbation lemma.

Everything is lazy: a :class:`LinearOp` is a rule sending one basis label to
a dict of ``label -> scalar``.  Results are memoized per label, so composite
maps built from perturbation series are evaluated once per basis element and
reused.  Equalities are checked extensionally over explicit finite windows
of basis labels.

Sign convention for retracts (i, p, h) between a small complex C and a big
complex D::

    h d_D + d_D h = id - i p
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

from . import _faults
from .graded_algebra import Element, _sort_key, accumulate, label_to_json
from .scalars import scalar_to_json

Label = Hashable
Action = Callable[[Label], Mapping[Label, Any]]


class NilpotencyError(RuntimeError):
    """A perturbation series did not terminate within its bound."""


class ComplexMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# linear operators


class LinearOp:
    """A linear map given on basis labels, memoized per label."""

    def __init__(
        self,
        action: Action,
        *,
        degree: int = 0,
        target: str = "",
        name: str = "",
        memo: bool = True,
    ):
        self._action = action
        self.degree = degree
        self.target = target
        self.name = name or getattr(action, "__name__", "op")
        self._memo: dict | None = {} if memo else None
        if memo:
            _faults.register_memo_owner(self)

    def clear_memo(self) -> None:
        if self._memo is not None:
            self._memo.clear()

    def on_label(self, label: Label) -> Mapping[Label, Any]:
        memo = self._memo
        if memo is None:
            return self._action(label)
        got = memo.get(label)
        if got is None:
            got = {k: v for k, v in self._action(label).items() if v}
            memo[label] = got
        return got

    def apply_dict(self, terms: Mapping[Label, Any]) -> dict:
        out: dict = {}
        get = out.get
        memo = self._memo
        for lab, c in terms.items():
            img = memo.get(lab) if memo is not None else None
            if img is None:
                img = self.on_label(lab)
            if c == 1:
                for k, v in img.items():
                    out[k] = get(k, 0) + v
            else:
                for k, v in img.items():
                    out[k] = get(k, 0) + c * v
        return {k: v for k, v in out.items() if v}

    def __call__(self, x: Element) -> Element:
        return Element(self.target or x.grading, self.apply_dict(x.terms))

    # algebra of operators --------------------------------------------
    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        first, second = other, self

        def composite(label):
            return second.apply_dict(first.on_label(label))

        return LinearOp(
            composite,
            degree=self.degree + other.degree,
            target=self.target,
            name=f"{self.name}∘{other.name}",
        )

    def __add__(self, other: "LinearOp") -> "LinearOp":
        a, b = self, other

        def total(label):
            out = dict(a.on_label(label))
            accumulate(out, b.on_label(label))
            return out

        return LinearOp(total, degree=self.degree, target=self.target or other.target,
                        name=f"({self.name}+{other.name})")

    def __neg__(self) -> "LinearOp":
        a = self
        return LinearOp(lambda lab: {k: -v for k, v in a.on_label(lab).items()},
                        degree=self.degree, target=self.target, name=f"-{self.name}")

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return self + (-other)

    def scaled(self, c) -> "LinearOp":
        a = self
        return LinearOp(lambda lab: {k: c * v for k, v in a.on_label(lab).items()},
                        degree=self.degree, target=self.target, name=f"{c}·{self.name}")

    def __repr__(self) -> str:
        return f"LinearOp({self.name}, degree={self.degree})"


def identity_op(target: str = "", name: str = "id") -> LinearOp:
    return LinearOp(lambda lab: {lab: 1}, degree=0, target=target, name=name, memo=False)


def zero_op(degree: int = 0, target: str = "", name: str = "0") -> LinearOp:
    return LinearOp(lambda lab: {}, degree=degree, target=target, name=name, memo=False)


# ---------------------------------------------------------------------------
# complexes


@dataclass
class Complex:
    """A cochain complex known through its differential and a degree function.

    ``window`` enumerates the basis labels used for verification; it can be
    swapped for a bigger or smaller one with :meth:`with_window`.
    """

    name: str
    d: LinearOp
    degree: Callable[[Label], int]
    grading: str = ""
    window: Callable[[], Iterable[Label]] | None = None

    def with_window(self, window: Callable[[], Iterable[Label]] | Iterable[Label]) -> "Complex":
        if not callable(window):
            labels = list(window)
            window = lambda: labels
        return replace(self, window=window)

    def basis(self) -> list[Label]:
        if self.window is None:
            raise ValueError(f"complex {self.name} has no verification window")
        return list(self.window())

    def element(self, label: Label, coef=1) -> Element:
        return Element.basis(self.grading, label, coef)


def scalar_complex(name: str = "R", label: Label = ()) -> Complex:
    """The ground ring concentrated in degree 0, with one basis label."""
    return Complex(name, zero_op(1), lambda lab: 0, grading="scalar", window=lambda: [label])


def zero_complex(name: str = "0") -> Complex:
    return Complex(name, zero_op(1), lambda lab: 0, grading="zero", window=lambda: [])


# ---------------------------------------------------------------------------
# reports


@dataclass
class Failure:
    label: Label
    lhs: dict
    rhs: dict

    def to_json(self) -> dict:
        return {
            "label": label_to_json(self.label),
            "lhs": _terms_json(self.lhs),
            "rhs": _terms_json(self.rhs),
        }


def _terms_json(terms: Mapping) -> list:
    items = sorted(terms.items(), key=lambda kv: _sort_key(kv[0]))
    return [[label_to_json(k), scalar_to_json(v)] for k, v in items]


@dataclass
class Report:
    identity: str
    checked: int = 0
    failures: list[Failure] = field(default_factory=list)
    max_failures: int = 5

    @property
    def ok(self) -> bool:
        return not self.failures and self._overflow == 0

    _overflow: int = 0

    def record(self, label: Label, lhs: Mapping, rhs: Mapping) -> None:
        self.checked += 1
        lhs = {k: v for k, v in lhs.items() if v}
        rhs = {k: v for k, v in rhs.items() if v}
        if lhs != rhs:
            if len(self.failures) < self.max_failures:
                self.failures.append(Failure(label, lhs, rhs))
            else:
                self._overflow += 1

    @property
    def failure_count(self) -> int:
        return len(self.failures) + self._overflow

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "checked": self.checked,
            "failures": [f.to_json() for f in self.failures],
        }

    def __repr__(self) -> str:
        state = "ok" if self.ok else f"{self.failure_count} failures"
        return f"Report({self.identity}: {self.checked} checked, {state})"


def check_identity(
    name: str,
    labels: Iterable[Label],
    lhs: Callable[[Label], Mapping],
    rhs: Callable[[Label], Mapping],
) -> Report:
    rep = Report(name)
    for lab in labels:
        rep.record(lab, lhs(lab), rhs(lab))
    return rep


def check_complex(c: Complex, labels: Iterable[Label] | None = None) -> Report:
    """Verify ``d∘d = 0`` on every label of the window."""
    labels = c.basis() if labels is None else labels
    d = c.d
    return check_identity(f"d² = 0 on {c.name}", labels, lambda lab: d.apply_dict(d.on_label(lab)),
                          lambda lab: {})


# ---------------------------------------------------------------------------
# retracts


@dataclass
class HomotopyRetract:
    """Maps i: C -> D, p: D -> C and h: D -> D[-1] between a small and a big complex.

    ``is_deformation`` / ``is_special`` stay ``None`` until a verification run
    fills them in; see :func:`verify_retract`.
    """

    small: Complex
    big: Complex
    i: LinearOp
    p: LinearOp
    h: LinearOp
    name: str = "retract"
    is_deformation: bool | None = None
    is_special: bool | None = None

    def reversed(self) -> "HomotopyRetract":
        """For a deformation retract, (p, i, 0) is a retract with the roles of C and D swapped."""
        return HomotopyRetract(
            small=self.big, big=self.small, i=self.p, p=self.i,
            h=zero_op(-1, self.small.grading, "0"), name=f"reversed({self.name})",
        )


@dataclass
class RetractReport:
    name: str
    reports: list[Report]
    is_retract: bool
    is_deformation: bool
    is_special: bool

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def to_json(self) -> dict:
        return {
            "retract": self.name,
            "is_retract": self.is_retract,
            "is_deformation": self.is_deformation,
            "is_special": self.is_special,
            "reports": [r.to_json() for r in self.reports],
        }


def verify_retract(
    r: HomotopyRetract,
    big_labels: Iterable[Label] | None = None,
    small_labels: Iterable[Label] | None = None,
    *,
    require: Sequence[str] = ("retract",),
) -> RetractReport:
    """Check the retract identities exactly on every window label.

    ``require`` lists the flags the caller expects ("retract", "deformation",
    "special"); the corresponding identities always get checked, and the
    report's flags say which ones actually hold.
    """
    big = list(r.big.basis() if big_labels is None else big_labels)
    small = list(r.small.basis() if small_labels is None else small_labels)
    dD, dC, i, p, h = r.big.d, r.small.d, r.i, r.p, r.h
    reps = []
    reps.append(check_identity(f"{r.name}: d i = i d", small,
                               lambda lab: dD.apply_dict(i.on_label(lab)),
                               lambda lab: i.apply_dict(dC.on_label(lab))))
    reps.append(check_identity(f"{r.name}: d p = p d", big,
                               lambda lab: dC.apply_dict(p.on_label(lab)),
                               lambda lab: p.apply_dict(dD.on_label(lab))))

    def homotopy_lhs(lab):
        out = dict(dD.apply_dict(h.on_label(lab)))
        accumulate(out, h.apply_dict(dD.on_label(lab)))
        return out

    def homotopy_rhs(lab):
        out = {lab: 1}
        accumulate(out, i.apply_dict(p.on_label(lab)), -1)
        return out

    reps.append(check_identity(f"{r.name}: h d + d h = id - i p", big, homotopy_lhs, homotopy_rhs))
    is_retract = all(x.ok for x in reps)

    pi = check_identity(f"{r.name}: p i = id", small,
                        lambda lab: p.apply_dict(i.on_label(lab)), lambda lab: {lab: 1})
    is_deformation = is_retract and pi.ok
    special = [
        check_identity(f"{r.name}: h h = 0", big, lambda lab: h.apply_dict(h.on_label(lab)), lambda lab: {}),
        check_identity(f"{r.name}: p h = 0", big, lambda lab: p.apply_dict(h.on_label(lab)), lambda lab: {}),
        check_identity(f"{r.name}: h i = 0", small, lambda lab: h.apply_dict(i.on_label(lab)), lambda lab: {}),
    ]
    is_special = is_deformation and all(x.ok for x in special)
    if "deformation" in require or "special" in require:
        reps.append(pi)
    if "special" in require:
        reps.extend(special)
    r.is_deformation = is_deformation
    r.is_special = is_special
    return RetractReport(r.name, reps, is_retract, is_deformation, is_special)


def identity_retract(c: Complex, name: str = "identity") -> HomotopyRetract:
    return HomotopyRetract(c, c, identity_op(c.grading), identity_op(c.grading),
                           zero_op(-1, c.grading), name=name)


def compose_retracts(outer: HomotopyRetract, inner: HomotopyRetract, name: str = "") -> HomotopyRetract:
    """``(i2, p2, h2) ∘ (i1, p1, h1) = (i2 i1, p1 p2, h2 + i2 h1 p2)``.

    ``inner`` retracts onto the small complex, ``outer`` is the retract whose
    small complex is ``inner``'s big complex.
    """
    if inner.big is not outer.small and inner.big.name != outer.small.name:
        raise ComplexMismatch(f"cannot compose: {inner.big.name} is not {outer.small.name}")
    i = outer.i @ inner.i
    p = inner.p @ outer.p
    h = outer.h + outer.i @ inner.h @ outer.p
    h.target = outer.big.grading
    return HomotopyRetract(inner.small, outer.big, i, p, h,
                           name=name or f"{outer.name}∘{inner.name}")


# -- direct sums -------------------------------------------------------------


def _tagged(op: LinearOp, tag: int) -> Action:
    def act(label):
        t, lab = label
        if t != tag:
            return {}
        return {(tag, k): v for k, v in op.on_label(lab).items()}
    return act


def _sum_op(a: LinearOp, b: LinearOp, target: str, name: str) -> LinearOp:
    fa, fb = _tagged(a, 0), _tagged(b, 1)
    return LinearOp(lambda lab: fa(lab) if lab[0] == 0 else fb(lab), degree=a.degree,
                    target=target, name=name)


def sum_complex(c1: Complex, c2: Complex, name: str | None = None) -> Complex:
    grading = f"({c1.grading}⊕{c2.grading})"

    def window():
        for lab in c1.basis():
            yield (0, lab)
        for lab in c2.basis():
            yield (1, lab)

    has_window = c1.window is not None and c2.window is not None
    return Complex(
        name or f"{c1.name}⊕{c2.name}",
        _sum_op(c1.d, c2.d, grading, "d⊕d"),
        lambda lab: (c1.degree if lab[0] == 0 else c2.degree)(lab[1]),
        grading=grading,
        window=window if has_window else None,
    )


def direct_sum(r1: HomotopyRetract, r2: HomotopyRetract, name: str = "") -> HomotopyRetract:
    small = sum_complex(r1.small, r2.small)
    big = sum_complex(r1.big, r2.big)
    return HomotopyRetract(
        small, big,
        _sum_op(r1.i, r2.i, big.grading, "i⊕i"),
        _sum_op(r1.p, r2.p, small.grading, "p⊕p"),
        _sum_op(r1.h, r2.h, big.grading, "h⊕h"),
        name=name or f"{r1.name}⊕{r2.name}",
    )


# -- tensor products ---------------------------------------------------------


def tensor_complex(c1: Complex, c2: Complex, name: str | None = None) -> Complex:
    """``d(x⊗y) = dx⊗y + (-1)^|x| x⊗dy`` on labels ``(x, y)``."""
    grading = f"({c1.grading}⊗{c2.grading})"

    def d(label):
        x, y = label
        out: dict = {}
        for x2, c in c1.d.on_label(x).items():
            out[(x2, y)] = out.get((x2, y), 0) + c
        sign = -1 if c1.degree(x) % 2 else 1
        for y2, c in c2.d.on_label(y).items():
            out[(x, y2)] = out.get((x, y2), 0) + sign * c
        return out

    def window():
        ys = c2.basis()
        for x in c1.basis():
            for y in ys:
                yield (x, y)

    has_window = c1.window is not None and c2.window is not None
    return Complex(name or f"{c1.name}⊗{c2.name}", LinearOp(d, degree=1, target=grading, name="d⊗"),
                   lambda lab: c1.degree(lab[0]) + c2.degree(lab[1]), grading=grading,
                   window=window if has_window else None)


def _tensor_maps(a: LinearOp, b: LinearOp, sign_of: Callable[[Label], int], target: str, name: str) -> LinearOp:
    """``(a⊗b)(x⊗y) = (-1)^{|b||x|} a(x)⊗b(y)``; ``sign_of(x)`` supplies that sign."""
    def act(label):
        x, y = label
        s = sign_of(x)
        out: dict = {}
        bx = b.on_label(y)
        if not bx:
            return out
        for x2, c1 in a.on_label(x).items():
            for y2, c2 in bx.items():
                out[(x2, y2)] = out.get((x2, y2), 0) + s * c1 * c2
        return out
    return LinearOp(act, degree=a.degree + b.degree, target=target, name=name)


def tensor_retract(r1: HomotopyRetract, r2: HomotopyRetract, name: str = "") -> HomotopyRetract:
    """Tensor product of retracts with homotopy ``h(x)⊗y + (-1)^|x| i p(x)⊗k(y)``."""
    small = tensor_complex(r1.small, r2.small)
    big = tensor_complex(r1.big, r2.big)
    plus = lambda x: 1
    i = _tensor_maps(r1.i, r2.i, plus, big.grading, "i⊗j")
    p = _tensor_maps(r1.p, r2.p, plus, small.grading, "p⊗q")
    h_left = _tensor_maps(r1.h, identity_op(), plus, big.grading, "h⊗id")
    ip = r1.i @ r1.p
    h_right = _tensor_maps(ip, r2.h, lambda x: -1 if r1.big.degree(x) % 2 else 1, big.grading, "ip⊗k")
    h = h_left + h_right
    h.target = big.grading
    return HomotopyRetract(small, big, i, p, h, name=name or f"{r1.name}⊗{r2.name}")


def transport(
    r: HomotopyRetract,
    new_big: Complex,
    to_old: LinearOp,
    from_old: LinearOp,
    name: str = "",
) -> HomotopyRetract:
    """Move a retract along a chain isomorphism ``from_old: old big -> new big``."""
    i = from_old @ r.i
    p = r.p @ to_old
    h = from_old @ r.h @ to_old
    i.target = h.target = new_big.grading
    p.target = r.small.grading
    return HomotopyRetract(r.small, new_big, i, p, h, name=name or r.name)


# ---------------------------------------------------------------------------
# perturbation


def geometric_series_terms(op: LinearOp, terms: Mapping, bound: int) -> list[dict]:
    """The nonzero terms ``(-1)^n op^n(x)``, n = 0, 1, ...; raises past ``bound`` terms."""
    out = []
    current = {k: v for k, v in terms.items() if v}
    n = 0
    while current:
        if n >= bound:
            raise NilpotencyError(f"series of {op.name} still nonzero after {bound} terms")
        out.append(current if n % 2 == 0 else {k: -v for k, v in current.items()})
        current = op.apply_dict(current)
        n += 1
    return out


def geometric_inverse(op: LinearOp, x: Element, bound: int) -> Element:
    """``sum_n (-1)^n op^n(x)``, i.e. ``(id + op)^{-1} x`` for a locally nilpotent ``op``."""
    total: dict = {}
    for t in geometric_series_terms(op, x.terms, bound):
        accumulate(total, t)
    return Element(x.grading, total)


def series_op(op: LinearOp, bound: Callable[[Label], int], target: str = "", name: str = "") -> LinearOp:
    """The operator ``(id + op)^{-1}`` evaluated label by label."""
    def act(label):
        total: dict = {}
        for t in geometric_series_terms(op, {label: 1}, bound(label)):
            accumulate(total, t)
        return total
    return LinearOp(act, degree=0, target=target, name=name or f"(id+{op.name})⁻¹")


@dataclass
class Perturbation:
    b: LinearOp
    bound: Callable[[Label], int] | int = 0

    def bound_fn(self, big: Complex) -> Callable[[Label], int]:
        if callable(self.bound):
            return self.bound
        if self.bound:
            fixed = self.bound
            return lambda lab: fixed
        return lambda lab: abs(big.degree(lab)) + 2


@dataclass
class PerturbedRetract(HomotopyRetract):
    """Result of :func:`perturb`; keeps the ingredients for term-by-term checks."""

    original: HomotopyRetract | None = None
    perturbation: Perturbation | None = None


def perturb(r: HomotopyRetract, pert: Perturbation, name: str = "") -> PerturbedRetract:
    """Homological perturbation of ``r`` along ``b``.

    New big differential ``d + b``; with ``A = (id + b h)^{-1}`` and
    ``B = (id + h b)^{-1}``::

        d_C' = d_C + p A b i,   I = B i,   P = p A,   H = B h.
    """
    b = pert.b
    bound = pert.bound_fn(r.big)
    bh = b @ r.h
    hb = r.h @ b
    A = series_op(bh, bound, r.big.grading, "(id+bh)⁻¹")
    B = series_op(hb, bound, r.big.grading, "(id+hb)⁻¹")
    P = r.p @ A
    P.target = r.small.grading
    I = B @ r.i
    I.target = r.big.grading
    H = B @ r.h
    H.target = r.big.grading
    small_d = r.small.d + r.p @ A @ b @ r.i
    small_d.target = r.small.grading
    big_d = r.big.d + b
    big_d.target = r.big.grading
    small = replace(r.small, d=small_d, name=f"{r.small.name}'")
    big = replace(r.big, d=big_d, name=f"{r.big.name}+b")
    return PerturbedRetract(small, big, I, P, H, name=name or f"perturbed({r.name})",
                            original=r, perturbation=pert)


def alternative_homotopy(r: PerturbedRetract) -> LinearOp:
    """The other form of the perturbed homotopy, ``h (id + b h)^{-1}``."""
    assert r.original is not None and r.perturbation is not None
    b = r.perturbation.b
    bound = r.perturbation.bound_fn(r.original.big)
    A = series_op(b @ r.original.h, bound, r.original.big.grading)
    H = r.original.h @ A
    H.target = r.original.big.grading
    return H

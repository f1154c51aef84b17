"""Command-line front end.

Subcommands::

    hkr-retract verify <suite> [--dim N] [--deg K] [--n N] [--seed S] [--inject FAULT]
    hkr-retract primitive <symbol.json> [--seed S]
    hkr-retract class <symbol.json>

Everything is printed as JSON on stdout.  Exit codes: 0 when every identity
holds exactly, 1 when one fails (the report carries a witness), 2 for
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Any, Sequence

from . import _faults
from .hkr_model import (
    Decomposition,
    Symbol,
    decompose,
    hochschild_delta_eval,
    op_apply,
    op_closure,
    theta_nabla,
)
from .homotopy import Report
from .scalars import random_polynomial
from .suites import SUITES, SuiteError, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would print to stderr and exit 2 with text
        raise UsageError(message)


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, indent=2) + "\n")



# ---------------------------------------------------------------------------
# verify


def cmd_verify(suite: str, *, dim: int | None = None, deg: int | None = None, n: int | None = None,
               seed: int = 0, inject: str | None = None) -> tuple[int, dict]:
    params = {"dim": dim, "deg": deg, "n": n, "seed": seed}
    ctx = _faults.inject(inject) if inject else nullcontext()
    with ctx:
        reports = run_suite(suite, **params)
    failed = [r for r in reports if not r.ok]
    out = {
        "command": "verify",
        "suite": suite,
        "seed": seed,
        "params": {k: v for k, v in params.items() if v is not None},
        "inject": inject,
        "ok": not failed,
        "checked": sum(r.checked for r in reports),
        "reports": [{"identity": r.identity, "checked": r.checked, "ok": r.ok} for r in reports],
    }
    if failed:
        out["witness"] = failed[0].to_json()
        out["failed"] = [r.identity for r in failed]
    return (EXIT_FAIL if failed else EXIT_OK), out


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    """A decomposition ``x = hkr(hkr⁻¹x) + δΘ^∇x + Θ^∇δx`` plus an evaluation round trip."""

    decomposition: Decomposition
    seed: int
    samples: int
    round_trip: Report

    @property
    def accepted(self) -> bool:
        return self.decomposition.exact_residual and self.round_trip.ok

    def to_json(self) -> dict:
        d = self.decomposition
        return {
            "input": d.symbol.to_json(),
            "closed": d.closed,
            "closedness_residual": d.closedness.to_json(),
            "primitive": d.primitive.to_json(),
            "class_multivector": d.class_multivector.to_json(),
            "class_representative": d.class_symbol.to_json(),
            "reconstruction_residual": d.reconstruction.to_json(),
            "round_trip": {"seed": self.seed, "samples": self.samples, "ok": self.round_trip.ok,
                           "failures": [f.to_json() for f in self.round_trip.failures]},
            "accepted": self.accepted,
        }


def certify(s: Symbol, seed: int = 0, samples: int = 20, poly_deg: int = 3) -> Certificate:
    """Decompose ``s`` and re-check the decomposition by operator evaluation.

    The round trip evaluates ``Op(x)``, ``Op(hkr hkr⁻¹ x)``, the Hochschild
    differential of ``Op(Θ^∇x)`` and ``Op(Θ^∇ δx)`` on random polynomial
    tuples, so the differential is exercised independently of ``δ_ca``.
    """
    if s.variant != "scalar":
        raise ValueError("certificates are produced for scalar symbols")
    dec = decompose(s)
    rng = random.Random(seed)
    rep = Report("x = hkr hkr⁻¹ x + δ Θ^∇ x + Θ^∇ δ x (evaluation)")
    n = s.n
    by_degree: dict[int, Symbol] = {}
    for lab, c in s.terms.items():
        k = len(lab)
        by_degree[k] = by_degree.get(k, Symbol.zero(s.model)) + Symbol.word(s.model, lab, c)
    for k, part in sorted(by_degree.items()):
        piece = decompose(part)
        for t in range(samples):
            args = [random_polynomial(rng, n, poly_deg, 4) for _ in range(k)]
            lhs = op_apply(part, args)
            rhs = op_apply(piece.class_symbol, args)
            if k >= 1 and piece.primitive:
                rhs = rhs + hochschild_delta_eval(op_closure(piece.primitive), k - 1, args)
            if piece.closedness:
                rhs = rhs + op_apply(theta_nabla(piece.closedness), args)
            rep.record((k, t), {0: lhs}, {0: rhs})
    return Certificate(dec, seed, samples, rep)


def cmd_primitive(s: Symbol, seed: int = 0) -> tuple[int, dict]:
    cert = certify(s, seed=seed)
    out = {"command": "primitive", "seed": seed, **cert.to_json()}
    return (EXIT_OK if cert.accepted else EXIT_FAIL), out


def cmd_class(s: Symbol) -> tuple[int, dict]:
    dec = decompose(s)
    return EXIT_OK, {"command": "class", "class_multivector": dec.class_multivector.to_json(),
                     "closed": dec.closed}


# ---------------------------------------------------------------------------
# entry point


def _load_symbol(path: str) -> Symbol:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("a symbol file must hold a JSON object")
    try:
        return Symbol.from_json(data)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hkr-retract", description="Exact verification of van Est and HKR retracts.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help="one of: " + ", ".join(sorted(SUITES)))
    v.add_argument("--dim", type=int)
    v.add_argument("--deg", type=int)
    v.add_argument("--n", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject", choices=_faults.KNOWN,
                   help="test mode: run with a deliberate sign fault (negative control)")
    pr = sub.add_parser("primitive", help="certified primitive and class of a symbol")
    pr.add_argument("file")
    pr.add_argument("--seed", type=int, default=0)
    c = sub.add_parser("class", help="multivector representative of a symbol's class")
    c.add_argument("file")
    for sp in (v, pr, c):
        sp.error = p.error  # route all usage errors through UsageError
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify":
            code, out = cmd_verify(args.suite, dim=args.dim, deg=args.deg, n=args.n, seed=args.seed,
                                   inject=args.inject)
        elif args.command == "primitive":
            code, out = cmd_primitive(_load_symbol(args.file), seed=args.seed)
        else:
            code, out = cmd_class(_load_symbol(args.file))
    except (UsageError, SuiteError) as exc:
        _emit({"error": str(exc)})
        return EXIT_USAGE
    _emit(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""The twelve acceptance criteria, each run on its full window.

Every criterion prints one ``PASS``/``FAIL`` line with its wall time.  Where
a criterion names a time budget, staying inside it is part of passing.
"""

import time

import pytest

from conftest import ACCEPTANCE_LINES

from hkr_retract.cli import cmd_verify
from hkr_retract.suites import (
    ca_suite,
    coalgebra_suite,
    coefficients_suite,
    equivariance_suite,
    hkr_suite,
    perturbation_suite,
    reduced_suite,
    retracts_suite,
    symbols_suite,
    van_est_suite,
    variants_suite,
)


def _criterion(number: int, title: str, budget: float | None, run):
    start = time.perf_counter()
    reports = run()
    elapsed = time.perf_counter() - start
    bad = [r for r in reports if not r.ok]
    in_time = budget is None or elapsed < budget
    ok = bool(reports) and not bad and in_time
    limit = "no budget" if budget is None else f"budget {budget:.0f} s"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({elapsed:.1f} s, {limit})"
    print("\n" + line, flush=True)
    ACCEPTANCE_LINES.append(line)
    details = [f"  {r.identity}: {r.failure_count} failures, first {r.failures[0].to_json()}" for r in bad[:5]]
    for d in details:
        print(d, flush=True)
    assert reports, "no identity was checked"
    assert not bad, "\n".join([line] + details)
    assert in_time, line


def test_01_coalgebra_axioms():
    _criterion(1, "shuffle coalgebra axioms, dim ≤ 4, degree ≤ 4", 10, lambda: coalgebra_suite(4, 4))


def test_02_coalgebra_differential():
    _criterion(2, "δ_ca² = 0 and Sweedler form on T^≤3 Sym^≤3, dim ≤ 4", 30, lambda: ca_suite(4, 3, 3))


def test_03_elementary_retracts():
    _criterion(3, "regular-coefficient and Poincaré retracts, degrees ≤ (3,3)", 30, lambda: retracts_suite(3, 3))


def test_04_perturbation_lemma():
    _criterion(4, "perturbed maps against explicit series and power closed forms", 60,
               lambda: perturbation_suite(3, k_max=2, s_max=2, r_max=2, l_max=3))


def test_05_van_est_retract():
    _criterion(5, "van Est retract on Λ^≤4 V and T^≤4 Sym^≤3 V, dim 3", 120,
               lambda: van_est_suite(3, k_max=4, s_max=3, l_max=4))


# Degrees ≤ 3 are covered by two windows: every degree 3 over a plane, and
# tensor degree 3 with factor and comodule degree 2 in dimension 3.  Degree 3
# everywhere in dimension 3 does not fit in memory here.
DEGREE_3_WINDOWS = [(2, 3), (3, 2)]


def test_06_coefficient_retract():
    _criterion(6, "coefficient retract and closed VE_M formula for four comodules, degrees ≤ 3", 120,
               lambda: [r for dim, deg in DEGREE_3_WINDOWS
                        for r in coefficients_suite(dim, deg, k_max=3, literal=True)])


def test_07_reduced_subcomplex():
    _criterion(7, "reduced subcomplex closure and its retract, degrees ≤ 3", None,
               lambda: [r for dim, deg in DEGREE_3_WINDOWS for r in reduced_suite(dim, deg, 3)])


def test_08_symbol_calculus():
    _criterion(8, "key identity and intertwining, n ≤ 2, symbols ≤ (3,2), 100 tuples", 120,
               lambda: symbols_suite(2, k_max=3, s_max=2, poly_deg=3, tuples=100))


def test_09_hkr_retract():
    _criterion(9, "HKR retract identities and the certificate of μ", 120, lambda: hkr_suite(2, 3, 2))


def test_10_variants():
    _criterion(10, "bundle, submanifold, submersion, projectable and foliation models", 120,
               lambda: variants_suite(0))


def test_11_equivariance():
    _criterion(11, "permutation and diagonal-derivation equivariance", 60, lambda: equivariance_suite(3, 2))


NEGATIVE = [("delta_ca", "ca", {"dim": 2, "deg": 2}),
            ("h", "van_est", {"dim": 2, "deg": 2}),
            ("op_prefactor", "symbols", {"n": 1, "deg": 2})]


def test_12_negative_controls():
    from hkr_retract.homotopy import Report

    def run():
        reports = []
        for fault, suite, params in NEGATIVE:
            code, out = cmd_verify(suite, inject=fault, **params)
            rep = Report(f"fault {fault} caught by {suite} with a witness")
            rep.record(fault, {"exit": code, "witness": bool(out.get("witness"))}, {"exit": 1, "witness": True})
            reports.append(rep)
            clean, _ = cmd_verify(suite, **params)
            rep = Report(f"{suite} passes again once {fault} is removed")
            rep.record(fault, {"exit": clean}, {"exit": 0})
            reports.append(rep)
        return reports

    _criterion(12, "injected faults in δ_ca, h and Op prefactors are detected", None, run)

"""Exact homological algebra for van Est and HKR deformation retracts.

All arithmetic is over the rationals.  The submodules build on one another:
``scalars`` and ``graded_algebra`` supply polynomials and the symmetric,
exterior and tensor algebras; ``homotopy`` holds complexes, retracts and the
perturbation lemma; ``ca_complex``, ``ce_complex`` and ``van_est`` assemble
the coalgebra, Chevalley–Eilenberg and van Est complexes; ``hkr_model``
realizes the flat polynomial model of multidifferential operators.
"""

from .graded_algebra import EXT, SYM, TENSOR, Element, tensor_basis_upto
from .homotopy import Complex, HomotopyRetract, LinearOp, Report, perturb, verify_retract
from .ca_complex import Comodule, make_comodule, regular_retract
from .ce_complex import poincare_retract
from .van_est import VanEst, Window, plain
from .hkr_model import (
    FlatModel,
    Symbol,
    decompose,
    hkr,
    hkr_inverse,
    model_instantiate,
    op_apply,
    theta_nabla,
)
from .scalars import Polynomial

__version__ = "0.1.0"

__all__ = [
    "EXT", "SYM", "TENSOR", "Element", "tensor_basis_upto",
    "Complex", "HomotopyRetract", "LinearOp", "Report", "perturb", "verify_retract",
    "Comodule", "make_comodule", "regular_retract", "poincare_retract",
    "VanEst", "Window", "plain",
    "FlatModel", "Symbol", "decompose", "hkr", "hkr_inverse", "model_instantiate", "op_apply",
    "theta_nabla", "Polynomial",
]

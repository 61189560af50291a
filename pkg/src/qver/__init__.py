"""SMT-based Hoare-triple verification of quantum circuits."""

__version__ = "0.1.0"

from .circuit import (
    Circuit,
    Gate,
    GateApplication,
    KickedIsingParams,
    build_bell_circuit,
    build_fabric,
    build_h4_block,
    build_kicked_ising,
    load_circuit,
    save_circuit,
)
from .encode import (
    Always,
    BasisInput,
    ExactVar,
    Explicit,
    HammingWeightPreserved,
    RationalApprox,
    Subspace,
    count_symbols,
)
from .smt import SolverConfig, Status, render_smtlib, run_bench, run_solver
from .vcgen import (
    HoareTriple,
    VerificationCondition,
    locality_reduce,
    make_compositional,
    make_fabric_prefix_vc,
    make_monolithic,
    make_wp_chain,
    weakest_precondition,
)

__all__ = [
    "Always", "BasisInput", "Circuit", "ExactVar", "Explicit", "Gate", "GateApplication",
    "HammingWeightPreserved", "HoareTriple", "KickedIsingParams", "RationalApprox",
    "SolverConfig", "Status", "Subspace", "VerificationCondition", "build_bell_circuit",
    "build_fabric", "build_h4_block", "build_kicked_ising", "count_symbols", "load_circuit",
    "locality_reduce", "make_compositional", "make_fabric_prefix_vc", "make_monolithic",
    "make_wp_chain", "render_smtlib", "run_bench", "run_solver", "save_circuit",
    "weakest_precondition",
]

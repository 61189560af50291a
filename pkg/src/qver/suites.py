"""Bundled benchmark suites."""

from __future__ import annotations

from .circuit import Circuit, H4, build_bell_circuit, build_fabric, fabric_layout
from .encode import Always, BasisInput, HammingWeightPreserved, Subspace
from .vcgen import (
    HoareTriple,
    VerificationCondition,
    make_fabric_prefix_vc,
    make_monolithic,
    make_wp_chain,
)

FABRIC_QUBITS = 6
FABRIC_LAYERS = 4
FABRIC_PREFIXES = (9, 8, 7, 5, 1)


def bell_triple() -> HoareTriple:
    return HoareTriple(BasisInput("00"), build_bell_circuit(), Subspace({"00", "11"}))


def h4_triple(lam="lambda") -> HoareTriple:
    return HoareTriple(Always(), Circuit.from_gates(2, [(H4(lam), (0, 1))]),
                       HammingWeightPreserved())


def table1_fabric(mode: str) -> Circuit:
    """The six-qubit fabric with every block driven by the one parameter ``lambda``."""
    blocks = len(fabric_layout(FABRIC_QUBITS, FABRIC_LAYERS))
    return build_fabric(FABRIC_QUBITS, FABRIC_LAYERS, ["lambda"] * blocks, mode=mode)


def fabric_name(k: int, blocks: int) -> str:
    if k == blocks:
        return f"H(2^{FABRIC_QUBITS})"
    return f"H(2^{FABRIC_QUBITS}), {k}/{blocks}"


def table1_suite() -> list[tuple[str, VerificationCondition]]:
    """The rows of the verification results table, in table order.

    The two TRIG rows are emitted but never dispatched; the unabridged
    fabric row is expected to run into the timeout.
    """
    rows: list[tuple[str, VerificationCondition]] = []
    bell = bell_triple()
    rows.append(("H+CNOT", make_monolithic(bell, "LRA", name="H+CNOT")))
    p_a1, c1, c2 = make_wp_chain(bell, "LRA", audit=True, prefix="H+CNOT, ")
    rows += [("H+CNOT, C1", c1), ("H+CNOT, C2", c2), ("H+CNOT, P+A1", p_a1)]

    decomposed = table1_fabric("decomposed")
    abstract = table1_fabric("abstract")
    hw = HammingWeightPreserved()
    name = f"H(2^{FABRIC_QUBITS}), naive"
    rows.append((name, make_monolithic(HoareTriple(Always(), decomposed, hw), "TRIG", name=name)))
    name = f"H(2^{FABRIC_QUBITS}), precise"
    rows.append((name, make_monolithic(HoareTriple(Always(), abstract, hw), "TRIG", name=name)))

    blocks = len(abstract.ops)
    for k in (blocks, *FABRIC_PREFIXES):
        name = fabric_name(k, blocks)
        rows.append((name, make_fabric_prefix_vc(abstract, k, name=name)))

    rows.append(("H(4)", make_monolithic(h4_triple(), "NRA", name="H(4)")))
    return rows


SUITES = {"table1": table1_suite}

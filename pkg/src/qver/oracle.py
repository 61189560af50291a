"""Dense state-vector simulator used as ground truth for the symbolic side."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateApplication, angle_value

NORM_TOL = 1e-6
MAX_UNITARY_QUBITS = 12

_SQRT_HALF = 1 / math.sqrt(2)
_FIXED = {
    "h": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
}


class OracleError(ValueError):
    pass


def gate_matrix(gate: Gate, bindings: dict[str, float] | None = None) -> np.ndarray:
    """Concrete matrix of ``gate`` in the local basis of its qubits."""
    if gate.kind in _FIXED:
        return _FIXED[gate.kind]
    if gate.kind == "unitary":
        return np.array(gate.param, dtype=complex)
    try:
        theta = angle_value(gate.param, bindings)
    except CircuitError as exc:
        raise OracleError(str(exc)) from exc
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if gate.kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == "rz":
        return np.diag([c - 1j * s, c + 1j * s])
    if gate.kind == "rzz":
        m, p = c - 1j * s, c + 1j * s
        return np.diag([m, p, p, m])
    if gate.kind == "h4":
        return np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=complex)
    raise OracleError(f"no matrix for {gate!r}")


@dataclass
class StateVector:
    """``2**n`` complex amplitudes indexed by basis bitstring (qubit 0 leftmost)."""

    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        n = int(round(math.log2(len(self.amps)))) if len(self.amps) else -1
        if n < 0 or 2 ** n != len(self.amps):
            raise OracleError("state length must be a power of two")
        if not np.all(np.isfinite(self.amps)):
            raise OracleError("state has non-finite amplitudes")

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(len(self.amps))))

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "StateVector":
        """Uniform on the unit sphere: complex Gaussians, normalized."""
        z = rng.standard_normal(2 ** n_qubits) + 1j * rng.standard_normal(2 ** n_qubits)
        return cls(z / np.linalg.norm(z))

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def label(self, i: int) -> str:
        return format(i, f"0{self.n_qubits}b")


def apply_gate(state: StateVector, app: GateApplication,
               bindings: dict[str, float] | None = None) -> StateVector:
    """Apply one gate by contracting its matrix into the addressed tensor axes.

    The state is viewed as an ``n``-dimensional ``2 x ... x 2`` tensor whose
    axis ``q`` is qubit ``q``; only those axes are touched, so amplitudes are
    mixed exactly within the groups that differ on the gate's qubits.
    """
    n = state.n_qubits
    k = len(app.qubits)
    if k != app.gate.arity:
        raise OracleError(f"arity mismatch for {app.gate!r}")
    if any(q >= n for q in app.qubits):
        raise OracleError(f"gate on qubit {max(app.qubits)} of a {n}-qubit state")
    u = gate_matrix(app.gate, bindings).reshape([2] * (2 * k))
    psi = state.amps.reshape([2] * n)
    # contract u's input axes with the addressed qubits, then move the
    # resulting output axes (now leading) back into place
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(app.qubits)))
    out = np.moveaxis(out, list(range(k)), list(app.qubits))
    return StateVector(out.reshape(-1))


def run(circuit: Circuit, state: StateVector,
        bindings: dict[str, float] | None = None) -> StateVector:
    if state.n_qubits != circuit.n_qubits:
        raise OracleError(f"{circuit.n_qubits}-qubit circuit on {state.n_qubits}-qubit state")
    for op in circuit.ops:
        state = apply_gate(state, op, bindings)
    return state


def trajectory(circuit: Circuit, state: StateVector,
               bindings: dict[str, float] | None = None) -> list[StateVector]:
    """States before the first gate and after every gate."""
    out = [state]
    for op in circuit.ops:
        state = apply_gate(state, op, bindings)
        out.append(state)
    return out


def hamming_weights(n_qubits: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(2 ** n_qubits)], dtype=float)


def expected_hamming_weight(state: StateVector) -> float:
    norm = state.norm_sq()
    if abs(norm - 1) > NORM_TOL:
        raise OracleError(f"state is not normalized (|psi|^2 = {norm:.9g})")
    probs = np.abs(state.amps) ** 2
    return float(np.dot(hamming_weights(state.n_qubits), probs))


def circuit_unitary(circuit: Circuit, bindings: dict[str, float] | None = None) -> np.ndarray:
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise OracleError(f"refusing to build a dense unitary on {n} > {MAX_UNITARY_QUBITS} qubits")
    dim = 2 ** n
    cols = []
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1
        cols.append(run(circuit, StateVector(e), bindings).amps)
    return np.column_stack(cols)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``a = e^{i phi} b`` for a single global phase."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < tol:
        return bool(np.allclose(a, b, atol=tol, rtol=0))
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1) > tol:
        return False
    return bool(np.allclose(a, phase * b, atol=tol, rtol=0))

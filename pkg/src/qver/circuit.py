"""Circuit intermediate representation, gate library and circuit generators.

Conventions
-----------
* Qubit 0 is the top wire of a circuit diagram and the *leftmost* bit of a
  basis label; basis index ``i`` enumerates bitstrings in lexicographic order
  (``00, 01, 10, 11`` for two qubits).
* Rotations are ``R_G(theta) = exp(-i * theta * G / 2)`` for generator
  ``G`` in ``{X, Y, Z, Z(x)Z}``.
* ``h4`` is the two-qubit Hamming-weight-preserving block with matrix::

      [[1,  0, 0, 0],
       [0,  c, s, 0],
       [0, -s, c, 0],
       [0,  0, 0, 1]]      c = cos(lambda/2), s = sin(lambda/2)

  Its Ry/CZ decomposition, checked against that matrix by the oracle, is::

      Ry(+pi/2) (x) Ry(+pi/2); CZ; Ry(+lambda/2) (x) Ry(-lambda/2); CZ;
      Ry(-pi/2) (x) Ry(-pi/2)

  The fabric diagram this comes from labels the same gates with
  ``pi/4`` and ``lambda/4``, i.e. it writes rotations as ``exp(-i theta Y)``.
  Under the half-angle convention above those labels double; the signs are
  taken exactly as drawn and reproduce ``+s`` above the diagonal.

Angles are either numbers (radians) or symbolic strings of the form
``[-][k*]name[/d]``, e.g. ``"lambda3"``, ``"-lambda3/2"``, ``"0.5*theta"``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from jsonschema import Draft202012Validator

SCHEMA_ID = "qver-circuit/1"
UNITARY_TOL = 1e-9

Angle = Union[float, str]

# gate name -> (arity, parameter name or None)
GATE_KINDS: dict[str, tuple[int, str | None]] = {
    "h": (1, None),
    "x": (1, None),
    "z": (1, None),
    "cnot": (2, None),
    "cz": (2, None),
    "rx": (1, "theta"),
    "ry": (1, "theta"),
    "rz": (1, "theta"),
    "rzz": (2, "theta"),
    "unitary": (0, "matrix"),  # arity from matrix dimension
    "h4": (2, "lambda"),
}

_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>-)?\s*(?:(?P<k>\d+(?:\.\d*)?)\s*\*\s*)?"
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*(?:/\s*(?P<d>\d+(?:\.\d*)?))?\s*$"
)


class CircuitError(ValueError):
    """Invalid circuit structure or parameters."""


class CircuitFormatError(CircuitError):
    """A circuit file does not conform to the schema."""


class UnknownGateError(CircuitFormatError):
    """A circuit file references a gate kind that is not in the library."""


def parse_angle(angle: str) -> tuple[Fraction, str]:
    """Split a symbolic angle into ``(coefficient, parameter name)``."""
    m = _ANGLE_RE.match(angle)
    if m is None:
        raise CircuitError(f"malformed symbolic angle {angle!r}")
    coef = Fraction(m["k"]) if m["k"] else Fraction(1)
    if m["d"]:
        coef /= Fraction(m["d"])
    if m["sign"]:
        coef = -coef
    return coef, m["name"]


def angle_value(angle: Angle, bindings: dict[str, float] | None = None) -> float:
    """Numeric value of ``angle``, resolving symbolic names via ``bindings``."""
    if isinstance(angle, str):
        coef, name = parse_angle(angle)
        if not bindings or name not in bindings:
            raise CircuitError(f"no value bound for parameter {name!r}")
        return float(coef) * float(bindings[name])
    return float(angle)


def scale_angle(angle: Angle, factor: Fraction) -> Angle:
    if isinstance(angle, str):
        coef, name = parse_angle(angle)
        return format_angle(coef * factor, name)
    return float(angle) * float(factor)


def format_angle(coef: Fraction, name: str) -> str:
    sign = "-" if coef < 0 else ""
    coef = abs(coef)
    head = name if coef.numerator == 1 else f"{coef.numerator}*{name}"
    return f"{sign}{head}" if coef.denominator == 1 else f"{sign}{head}/{coef.denominator}"


@dataclass(frozen=True)
class Gate:
    """A gate kind together with its parameter.

    ``param`` is an angle for rotations and ``h4``, a tuple-of-tuples complex
    matrix for ``unitary``, and ``None`` otherwise.
    """

    kind: str
    param: object = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise UnknownGateError(f"unknown gate kind {self.kind!r}")
        pname = GATE_KINDS[self.kind][1]
        if pname is None:
            if self.param is not None:
                raise CircuitError(f"gate {self.kind} takes no parameter")
        elif self.kind == "unitary":
            mat = np.asarray(self.param, dtype=complex)
            if mat.shape not in ((2, 2), (4, 4)):
                raise CircuitError("custom unitary must be 2x2 or 4x4")
            if not np.allclose(mat @ mat.conj().T, np.eye(len(mat)), atol=UNITARY_TOL, rtol=0):
                raise CircuitError("custom matrix is not unitary within 1e-9")
            object.__setattr__(self, "param", tuple(tuple(complex(v) for v in row) for row in mat))
        else:
            if isinstance(self.param, str):
                parse_angle(self.param)
            elif isinstance(self.param, (int, float)) and not isinstance(self.param, bool):
                if not math.isfinite(self.param):
                    raise CircuitError("angle must be finite")
                object.__setattr__(self, "param", float(self.param))
            else:
                raise CircuitError(f"gate {self.kind} needs a numeric or symbolic angle")

    @property
    def arity(self) -> int:
        if self.kind == "unitary":
            return 1 if len(self.param) == 2 else 2
        return GATE_KINDS[self.kind][0]

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.param, str)

    def symbol(self) -> str | None:
        """Name of the free parameter of a symbolic gate."""
        return parse_angle(self.param)[1] if self.is_symbolic else None

    def __repr__(self):
        if self.param is None:
            return self.kind.upper()
        if self.kind == "unitary":
            return f"UNITARY{len(self.param)}"
        return f"{self.kind.upper()}({self.param!r})"


def H() -> Gate:
    return Gate("h")


def X() -> Gate:
    return Gate("x")


def Z() -> Gate:
    return Gate("z")


def CNOT() -> Gate:
    return Gate("cnot")


def CZ() -> Gate:
    return Gate("cz")


def Rx(theta: Angle) -> Gate:
    return Gate("rx", theta)


def Ry(theta: Angle) -> Gate:
    return Gate("ry", theta)


def Rz(theta: Angle) -> Gate:
    return Gate("rz", theta)


def Rzz(theta: Angle) -> Gate:
    return Gate("rzz", theta)


def Unitary(matrix) -> Gate:
    return Gate("unitary", matrix)


def H4(lam: Angle) -> Gate:
    return Gate("h4", lam)


@dataclass(frozen=True)
class GateApplication:
    gate: Gate
    qubits: tuple[int, ...]
    step: int

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.gate.arity:
            raise CircuitError(
                f"{self.gate!r} expects {self.gate.arity} qubit(s), got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.gate!r} applied to repeated qubit {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError("negative qubit index")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[GateApplication, ...] = ()
    segment_marks: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "segment_marks", tuple(self.segment_marks))
        if not isinstance(self.n_qubits, int) or self.n_qubits < 1:
            raise CircuitError("n_qubits must be a positive integer")
        for i, op in enumerate(self.ops):
            if op.step != i:
                raise CircuitError(f"op {i} has step {op.step}; steps must be consecutive from 0")
            for q in op.qubits:
                if q >= self.n_qubits:
                    raise CircuitError(f"op {i}: qubit {q} out of range for {self.n_qubits} qubits")
        prev = 0
        for m in self.segment_marks:
            if m <= prev or m >= len(self.ops):
                raise CircuitError(
                    f"segment marks must be strictly increasing within (0, {len(self.ops)}): "
                    f"{list(self.segment_marks)}"
                )
            prev = m

    @classmethod
    def from_gates(cls, n_qubits: int, gates: Sequence[tuple[Gate, Sequence[int]]],
                   segment_marks: Sequence[int] = ()) -> "Circuit":
        ops = tuple(GateApplication(g, tuple(qs), i) for i, (g, qs) in enumerate(gates))
        return cls(n_qubits, ops, tuple(segment_marks))

    def __len__(self):
        return len(self.ops)

    def segments(self) -> list[tuple[int, int]]:
        """Half-open ``(start, stop)`` step ranges of the sub-circuits."""
        bounds = [0, *self.segment_marks, len(self.ops)]
        return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]

    def slice(self, start: int, stop: int) -> "Circuit":
        """Sub-circuit of steps ``[start, stop)``, renumbered from 0."""
        gates = [(op.gate, op.qubits) for op in self.ops[start:stop]]
        return Circuit.from_gates(self.n_qubits, gates)

    def symbols(self) -> list[str]:
        out = []
        for op in self.ops:
            s = op.gate.symbol()
            if s is not None and s not in out:
                out.append(s)
        return out

    def with_marks(self, marks: Sequence[int]) -> "Circuit":
        return Circuit(self.n_qubits, self.ops, tuple(marks))

    def bind(self, bindings: dict[str, float]) -> "Circuit":
        """Replace symbolic angles whose parameter is bound by their value."""
        ops = []
        for op in self.ops:
            g = op.gate
            if g.is_symbolic and g.symbol() in bindings:
                g = Gate(g.kind, angle_value(g.param, bindings))
            ops.append(GateApplication(g, op.qubits, op.step))
        return Circuit(self.n_qubits, tuple(ops), self.segment_marks)


# -- generators -------------------------------------------------------------


def build_bell_circuit() -> Circuit:
    """H on qubit 0 then CNOT(0 -> 1), split between the two gates."""
    return Circuit.from_gates(2, [(H(), [0]), (CNOT(), [0, 1])], segment_marks=[1])


def h4_decomposition(lam: Angle) -> list[tuple[Gate, tuple[int, int] | tuple[int]]]:
    """Ry/CZ gates of one ``h4`` block on local qubits (0, 1)."""
    half = scale_angle(lam, Fraction(1, 2))
    return [
        (Ry(math.pi / 2), (0,)),
        (Ry(math.pi / 2), (1,)),
        (CZ(), (0, 1)),
        (Ry(half), (0,)),
        (Ry(scale_angle(half, Fraction(-1))), (1,)),
        (CZ(), (0, 1)),
        (Ry(-math.pi / 2), (0,)),
        (Ry(-math.pi / 2), (1,)),
    ]


def build_h4_block(lam: Angle) -> Circuit:
    """Two-qubit ``h4`` block expanded into six Ry rotations and two CZs."""
    return Circuit.from_gates(2, [(g, qs) for g, qs in h4_decomposition(lam)])


def fabric_layout(n_qubits: int, layers: int) -> list[tuple[int, int]]:
    """Brick-wall qubit pairs, layer by layer, top to bottom.

    Even layers start at qubit 0, odd layers at qubit 1.
    """
    if n_qubits < 2 or n_qubits % 2:
        raise CircuitError("fabric width must be an even number >= 2")
    if layers < 1:
        raise CircuitError("fabric needs at least one layer")
    pairs = []
    for layer in range(layers):
        for q in range(layer % 2, n_qubits - 1, 2):
            pairs.append((q, q + 1))
    return pairs


def build_fabric(n_qubits: int, layers: int, lambdas: Sequence[Angle] | None = None,
                 mode: str = "abstract") -> Circuit:
    """Brick-wall fabric of ``h4`` blocks.

    ``lambdas`` gives one angle per block (numbers or parameter names); by
    default block ``b`` gets the symbolic parameter ``lambda{b}``.  In
    ``abstract`` mode each block is a single ``h4`` application; in
    ``decomposed`` mode it is inlined as Ry/CZ gates.  Segment marks sit at
    block boundaries either way.

    Six qubits with four layers gives the ten-block fabric.
    """
    pairs = fabric_layout(n_qubits, layers)
    if lambdas is None:
        lambdas = [f"lambda{b}" for b in range(len(pairs))]
    if len(lambdas) != len(pairs):
        raise CircuitError(f"fabric has {len(pairs)} blocks but {len(lambdas)} lambdas were given")
    if mode not in ("abstract", "decomposed"):
        raise CircuitError(f"unknown fabric mode {mode!r}")
    gates: list[tuple[Gate, tuple[int, ...]]] = []
    marks = []
    for (a, b), lam in zip(pairs, lambdas):
        if gates:
            marks.append(len(gates))
        if mode == "abstract":
            gates.append((H4(lam), (a, b)))
        else:
            for g, local in h4_decomposition(lam):
                gates.append((g, tuple((a, b)[i] for i in local)))
    return Circuit.from_gates(n_qubits, gates, marks)


def h4_block_count(circuit: Circuit) -> int:
    return sum(1 for op in circuit.ops if op.gate.kind == "h4")


@dataclass
class KickedIsingParams:
    """Parameters of one period of the kicked Ising chain.

    ``J`` has ``L - 1`` nearest-neighbour couplings and ``h`` has ``L``
    fields, all in radians.
    """

    L: int
    J: list[float]
    h: list[float]
    g: float = 1.0
    T: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise CircuitError("L must be positive")
        if len(self.J) != self.L - 1:
            raise CircuitError(f"expected {self.L - 1} couplings, got {len(self.J)}")
        if len(self.h) != self.L:
            raise CircuitError(f"expected {self.L} fields, got {len(self.h)}")

    @classmethod
    def sample(cls, L: int, seed: int, g: float = 1.0, T: float = 1.0) -> "KickedIsingParams":
        """Draw ``J_j ~ U[-1.5pi, -0.5pi]`` then ``h_j ~ U[-pi, pi]``.

        Uses numpy's PCG64 generator (``numpy.random.default_rng(seed)``),
        couplings first, so a seed fixes the circuit bit for bit.
        """
        rng = np.random.default_rng(seed)
        J = rng.uniform(-1.5 * math.pi, -0.5 * math.pi, size=L - 1).tolist()
        h = rng.uniform(-math.pi, math.pi, size=L).tolist()
        return cls(L=L, J=J, h=h, g=g, T=T, seed=seed)


def build_kicked_ising(params: KickedIsingParams) -> Circuit:
    """One Floquet period: the X kick, then Z fields, then ZZ couplings.

    ``exp(-i pi g T/2 X)`` is ``Rx(pi g T)``, ``exp(-i T/2 h Z)`` is
    ``Rz(T h)`` and ``exp(-i T/4 J ZZ)`` is ``Rzz(T J / 2)``; the product
    equals the Floquet operator exactly, without a global phase.
    """
    L, T = params.L, params.T
    gates: list[tuple[Gate, tuple[int, ...]]] = []
    gates += [(Rx(math.pi * params.g * T), (q,)) for q in range(L)]
    gates += [(Rz(T * params.h[q]), (q,)) for q in range(L)]
    gates += [(Rzz(T * params.J[j] / 2), (j, j + 1)) for j in range(L - 1)]
    return Circuit.from_gates(L, gates)


# -- serialization ----------------------------------------------------------

_PARAM_VALUE = {"type": ["number", "string"]}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
CIRCUIT_SCHEMA = {
    "type": "object",
    "required": ["n_qubits", "ops"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": SCHEMA_ID},
        "n_qubits": {"type": "integer", "minimum": 1},
        "ops": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["gate", "qubits"],
                "additionalProperties": False,
                "properties": {
                    "gate": {"type": "string"},
                    "qubits": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "params": {
                        "type": "object",
                        "properties": {
                            "matrix": {"type": "array", "items": {"type": "array", "items": _COMPLEX}},
                        },
                        "additionalProperties": _PARAM_VALUE,
                    },
                },
            },
        },
        "segments": {"type": "array", "items": {"type": "integer"}},
    },
}
_VALIDATOR = Draft202012Validator(CIRCUIT_SCHEMA)


def circuit_to_dict(circuit: Circuit) -> dict:
    ops = []
    for op in circuit.ops:
        g = op.gate
        params: dict = {}
        pname = GATE_KINDS[g.kind][1]
        if g.kind == "unitary":
            params["matrix"] = [[[v.real, v.imag] for v in row] for row in g.param]
        elif pname is not None:
            params[pname] = g.param
        ops.append({"gate": g.kind, "qubits": list(op.qubits), "params": params})
    return {
        "format": SCHEMA_ID,
        "n_qubits": circuit.n_qubits,
        "ops": ops,
        "segments": list(circuit.segment_marks),
    }


def _locate(text: str, path) -> str:
    where = "/".join(str(p) for p in path)
    return where or "<root>"


def circuit_from_dict(data: dict) -> Circuit:
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise CircuitFormatError(f"field {_locate('', e.absolute_path)}: {e.message}")
    n = data["n_qubits"]
    gates = []
    for i, op in enumerate(data["ops"]):
        kind = op["gate"]
        if kind not in GATE_KINDS:
            raise UnknownGateError(f"field ops/{i}/gate: unknown gate kind {kind!r}")
        params = op.get("params", {})
        pname = GATE_KINDS[kind][1]
        try:
            if kind == "unitary":
                if "matrix" not in params:
                    raise CircuitFormatError("missing matrix")
                param = [[complex(re, im) for re, im in row] for row in params["matrix"]]
            elif pname is not None:
                if pname not in params:
                    raise CircuitFormatError(f"missing parameter {pname!r}")
                param = params[pname]
            else:
                param = None
            gate = Gate(kind, param)
            for j, q in enumerate(op["qubits"]):
                if q >= n:
                    raise CircuitFormatError(f"qubits/{j}: index {q} out of range for {n} qubits")
            gates.append(GateApplication(gate, tuple(op["qubits"]), i))
        except CircuitError as exc:
            raise CircuitFormatError(f"field ops/{i}: {exc}") from exc
    try:
        return Circuit(n, tuple(gates), tuple(data.get("segments", ())))
    except CircuitError as exc:
        raise CircuitFormatError(f"field segments: {exc}") from exc


def save_circuit(circuit: Circuit, path: str | Path) -> None:
    text = json.dumps(circuit_to_dict(circuit), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_circuit(path: str | Path) -> Circuit:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return circuit_from_dict(data)

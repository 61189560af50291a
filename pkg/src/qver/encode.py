"""Symbolic amplitude encoding of circuits over real variables.

Every basis coefficient ``c_b`` at step ``j`` becomes two real variables,
``c_<b>_<j>_re`` and ``c_<b>_<j>_im``.  A gate step is the row-wise
matrix-vector product written as one equality per fresh variable, with
complex products expanded into real and imaginary parts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence

from .circuit import Gate, GateApplication, parse_angle
from .formula import (
    ONE,
    TRUE,
    ZERO,
    Cmp,
    Const,
    Formula,
    Mul,
    Neg,
    Term,
    Trig,
    Var,
    add,
    conj,
    eq,
    flatten_and,
    free_vars,
    is_one,
    is_zero,
    lt,
    mul,
    neg,
)

DIALECTS = ("LRA", "NRA", "TRIG")

Complex = tuple[Term, Term]
Surface = tuple[Complex, ...]


class EncodeError(ValueError):
    pass


def basis_label(i: int, n_qubits: int) -> str:
    return format(i, f"0{n_qubits}b")


def amp_name(bits: str, step: int, part: str) -> str:
    return f"c_{bits}_{step}_{part}"


def surface(n_qubits: int, step: int) -> Surface:
    """Default-named amplitude variables of every basis state at ``step``."""
    out = []
    for i in range(2 ** n_qubits):
        b = basis_label(i, n_qubits)
        out.append((Var(amp_name(b, step, "re")), Var(amp_name(b, step, "im"))))
    return tuple(out)


# -- 1/sqrt(2) and rotation constants ---------------------------------------


@dataclass(frozen=True)
class SqrtHalfMode:
    """How ``1/sqrt(2)`` is represented.

    ``rational`` inlines a decimal with ``precision`` significant digits and
    keeps formulas linear.  ``exact`` uses a variable ``r`` constrained by
    ``2*r*r = 1`` and ``r > 0``, which makes the formula nonlinear.
    """

    kind: str = "rational"
    precision: int = 16

    def __post_init__(self):
        if self.kind not in ("rational", "exact"):
            raise EncodeError(f"unknown sqrt-half mode {self.kind!r}")
        if self.precision < 1:
            raise EncodeError("precision must be positive")

    @property
    def approximate(self) -> bool:
        return self.kind == "rational"

    def value(self) -> Term:
        if self.kind == "exact":
            return SQRT_HALF_VAR
        with localcontext() as ctx:
            ctx.prec = self.precision
            return Const(Fraction(Decimal("0.5").sqrt()))

    def side_conditions(self) -> list[Formula]:
        if self.kind == "exact":
            r = SQRT_HALF_VAR
            return [eq(mul(Const(2), r, r), ONE), lt(ZERO, r)]
        return []


SQRT_HALF_VAR = Var("r")


def RationalApprox(precision: int = 16) -> SqrtHalfMode:
    return SqrtHalfMode("rational", precision)


def ExactVar() -> SqrtHalfMode:
    return SqrtHalfMode("exact")


def _snap(t: float, precision: int) -> Fraction:
    # land exactly on small dyadic values such as tan(pi/4) = 1
    k = round(t * 1024)
    if abs(t * 1024 - k) < 1e-10 * max(1.0, abs(t)):
        return Fraction(k, 1024)
    scale = 10 ** precision
    return Fraction(round(t * scale), scale)


def unit_circle_point(phi: float, precision: int = 16) -> tuple[Fraction, Fraction]:
    """Rational ``(cos phi, sin phi)`` lying exactly on the unit circle.

    Uses the tangent half-angle parametrisation, so ``c*c + s*s == 1`` holds
    in exact arithmetic and rotations stay norm preserving after rounding.
    """
    phi = math.remainder(phi, 2 * math.pi)
    if abs(abs(phi) - math.pi) < 1e-15:
        return Fraction(-1), Fraction(0)
    t = _snap(math.tan(phi / 2), precision)
    den = 1 + t * t
    return (1 - t * t) / den, 2 * t / den


def _rational(x: float, precision: int) -> Fraction:
    return _snap(x, precision)


# -- gate matrices ----------------------------------------------------------


def _half_angle_pair(angle, dialect: str, precision: int) -> tuple[Term, Term]:
    if isinstance(angle, str):
        if dialect != "TRIG":
            raise EncodeError(f"symbolic angle {angle!r} needs the TRIG dialect or an abstraction")
        coef, name = parse_angle(angle)
        half = mul(Const(coef / 2), Var(name))
        return Trig("cos", half), Trig("sin", half)
    c, s = unit_circle_point(float(angle) / 2, precision)
    return Const(c), Const(s)


def _k(x) -> Complex:
    return (Const(Fraction(x)), ZERO)


def symbolic_matrix(gate: Gate, mode: SqrtHalfMode = RationalApprox(),
                    dialect: str = "LRA") -> list[list[Complex]]:
    """Matrix of ``gate`` with entries as ``(re, im)`` term pairs.

    ``h4`` is covered only for a numeric angle or in the TRIG dialect; the
    relaxed form lives in :mod:`qver.vcgen`.
    """
    if dialect not in DIALECTS:
        raise EncodeError(f"unknown dialect {dialect!r}")
    kind = gate.kind
    z = (ZERO, ZERO)
    one = (ONE, ZERO)
    if kind == "h":
        r = mode.value()
        return [[(r, ZERO), (r, ZERO)], [(r, ZERO), (neg(r), ZERO)]]
    if kind == "x":
        return [[z, one], [one, z]]
    if kind == "z":
        return [[one, z], [z, _k(-1)]]
    if kind == "cnot":
        return [[one, z, z, z], [z, one, z, z], [z, z, z, one], [z, z, one, z]]
    if kind == "cz":
        return [[one, z, z, z], [z, one, z, z], [z, z, one, z], [z, z, z, _k(-1)]]
    if kind == "unitary":
        p = mode.precision
        return [[(Const(_rational(v.real, p)), Const(_rational(v.imag, p))) for v in row]
                for row in gate.param]
    c, s = _half_angle_pair(gate.param, dialect, mode.precision)
    if kind == "rx":
        return [[(c, ZERO), (ZERO, neg(s))], [(ZERO, neg(s)), (c, ZERO)]]
    if kind == "ry":
        return [[(c, ZERO), (neg(s), ZERO)], [(s, ZERO), (c, ZERO)]]
    if kind == "rz":
        return [[(c, neg(s)), z], [z, (c, s)]]
    if kind == "rzz":
        m, p_ = (c, neg(s)), (c, s)
        return [[m, z, z, z], [z, p_, z, z], [z, z, p_, z], [z, z, z, m]]
    if kind == "h4":
        return h4_matrix(c, s)
    raise EncodeError(f"no symbolic matrix for {gate!r}")


def h4_matrix(c: Term, s: Term) -> list[list[Complex]]:
    z, one = (ZERO, ZERO), (ONE, ZERO)
    return [
        [one, z, z, z],
        [z, (c, ZERO), (s, ZERO), z],
        [z, (neg(s), ZERO), (c, ZERO), z],
        [z, z, z, one],
    ]


# -- step constraints -------------------------------------------------------


@dataclass(frozen=True)
class StepConstraint:
    """Equalities defining the amplitudes after one gate.

    ``surface`` maps every basis index to the term holding its amplitude
    after the step; with pass-through elision some entries are the previous
    step's variables and have no equality.
    """

    step: int
    equalities: tuple[Cmp, ...]
    surface: Surface

    def definitions(self) -> dict[str, Term]:
        return {e.lhs.name: e.rhs for e in self.equalities}

    def formula(self) -> Formula:
        return conj(*self.equalities)


def _split_sign(t: Term) -> tuple[int, Term]:
    if isinstance(t, Const):
        return (1 if t.value >= 0 else -1), Const(abs(t.value))
    if isinstance(t, Neg):
        sg, base = _split_sign(t.arg)
        return -sg, base
    if isinstance(t, Mul) and isinstance(t.args[0], Const) and t.args[0].value < 0:
        return -1, mul(Const(-t.args[0].value), *t.args[1:])
    return 1, t


def _combine(pairs: Sequence[tuple[Term, Term]]) -> Term:
    """``sum(coef * x)``, factoring out a coefficient shared up to sign."""
    live = [(c, x) for c, x in pairs if not is_zero(c) and not is_zero(x)]
    if len(live) >= 2:
        split = [_split_sign(c) for c, _ in live]
        bases = {b for _, b in split}
        if len(bases) == 1:
            base = next(iter(bases))
            if not is_one(base):
                inner = add(*(x if sg > 0 else neg(x) for (sg, _), (_, x) in zip(split, live)))
                return mul(base, inner)
    return add(*(mul(c, x) for c, x in live))


def _local_index(i: int, qubits: Sequence[int], n: int) -> int:
    idx = 0
    for q in qubits:
        idx = (idx << 1) | ((i >> (n - 1 - q)) & 1)
    return idx


def _with_local(i: int, qubits: Sequence[int], n: int, local: int) -> int:
    k = len(qubits)
    for pos, q in enumerate(qubits):
        bit = (local >> (k - 1 - pos)) & 1
        shift = n - 1 - q
        i = (i & ~(1 << shift)) | (bit << shift)
    return i


def encode_matrix_step(matrix: Sequence[Sequence[Complex]], qubits: Sequence[int], n_qubits: int,
                       prev: Surface, to_step: int, elide: bool = False) -> StepConstraint:
    """Row-wise product of ``matrix`` (acting on ``qubits``) with ``prev``."""
    if len(matrix) != 2 ** len(qubits):
        raise EncodeError("matrix size does not match the number of qubits")
    fresh = surface(n_qubits, to_step)
    new_surface: list[Complex] = []
    eqs: list[Cmp] = []
    for i in range(2 ** n_qubits):
        row = matrix[_local_index(i, qubits, n_qubits)]
        cols = [(_with_local(i, qubits, n_qubits, m), entry) for m, entry in enumerate(row)
                if not (is_zero(entry[0]) and is_zero(entry[1]))]
        if elide and len(cols) == 1 and is_one(cols[0][1][0]) and is_zero(cols[0][1][1]):
            new_surface.append(prev[cols[0][0]])
            continue
        re_pairs: list[tuple[Term, Term]] = []
        im_pairs: list[tuple[Term, Term]] = []
        for j, (a, b) in cols:
            x, y = prev[j]
            # (a + ib)(x + iy) = (ax - by) + i(ay + bx)
            re_pairs += [(a, x), (neg(b), y)]
            im_pairs += [(a, y), (b, x)]
        re_var, im_var = fresh[i]
        eqs.append(Cmp("=", re_var, _combine(re_pairs)))
        eqs.append(Cmp("=", im_var, _combine(im_pairs)))
        new_surface.append(fresh[i])
    return StepConstraint(to_step, tuple(eqs), tuple(new_surface))


def encode_gate_step(app: GateApplication, n_qubits: int, from_step: int | None = None,
                     to_step: int | None = None, mode: SqrtHalfMode = RationalApprox(),
                     dialect: str = "LRA", prev: Surface | None = None,
                     elide: bool = False) -> StepConstraint:
    """Encode one concrete gate between two steps.

    Steps default to ``app.step -> app.step + 1``.  ``prev`` overrides the
    input surface (used when earlier steps elided pass-throughs).
    """
    if app.gate.kind == "h4":
        raise EncodeError("h4 blocks are encoded through vcgen.abstract_h4_step")
    from_step = app.step if from_step is None else from_step
    to_step = from_step + 1 if to_step is None else to_step
    if prev is None:
        prev = surface(n_qubits, from_step)
    matrix = symbolic_matrix(app.gate, mode, dialect)
    return encode_matrix_step(matrix, app.qubits, n_qubits, prev, to_step, elide)


# -- conditions -------------------------------------------------------------


@dataclass(frozen=True)
class Always:
    """The trivially true condition."""


@dataclass(frozen=True)
class BasisInput:
    """The state is exactly the basis state ``|bits>``."""

    bits: str


@dataclass(frozen=True)
class Subspace:
    """Amplitudes outside ``allowed`` vanish; optionally the state is normalized."""

    allowed: frozenset[str]
    normalized: bool = False

    def __init__(self, allowed, normalized: bool = False):
        object.__setattr__(self, "allowed", frozenset(allowed))
        object.__setattr__(self, "normalized", normalized)


@dataclass(frozen=True)
class HammingWeightPreserved:
    """Expected Hamming weight after the circuit equals the weight before it."""


@dataclass(frozen=True)
class Explicit:
    """A formula over named amplitude variables, used verbatim."""

    formula: Formula


Condition = Always | BasisInput | Subspace | HammingWeightPreserved | Explicit


def abs_sq(amp: Complex) -> Term:
    re, im = amp
    return add(mul(re, re), mul(im, im))


def hamming_weight_term(surf: Surface, n_qubits: int) -> Term:
    parts = []
    for i, amp in enumerate(surf):
        w = bin(i).count("1")
        if w:
            parts.append(mul(Const(w), abs_sq(amp)))
    return add(*parts)


def _check_bits(bits: str, n_qubits: int) -> None:
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise EncodeError(f"basis label {bits!r} does not fit {n_qubits} qubit(s)")


def encode_condition(cond: Condition, at: Surface, n_qubits: int,
                     start: Surface | None = None) -> Formula:
    """Formula for ``cond`` over the amplitudes ``at``.

    Hamming-weight preservation compares ``start`` with ``at``.
    """
    if isinstance(cond, Always):
        return TRUE
    if isinstance(cond, Explicit):
        return cond.formula
    if isinstance(cond, BasisInput):
        _check_bits(cond.bits, n_qubits)
        target = int(cond.bits, 2)
        parts = []
        for i, (re, im) in enumerate(at):
            parts += [eq(re, 1 if i == target else 0), eq(im, 0)]
        return conj(*parts)
    if isinstance(cond, Subspace):
        for b in cond.allowed:
            _check_bits(b, n_qubits)
        if not cond.allowed and cond.normalized:
            warnings.warn("empty subspace with normalization is unsatisfiable by construction",
                          stacklevel=2)
        parts = []
        for i, (re, im) in enumerate(at):
            if basis_label(i, n_qubits) not in cond.allowed:
                parts += [eq(re, 0), eq(im, 0)]
        if cond.normalized:
            parts.append(eq(add(*(abs_sq(a) for a in at)), 1))
        return conj(*parts)
    if isinstance(cond, HammingWeightPreserved):
        if start is None:
            raise EncodeError("Hamming-weight preservation needs the input surface")
        return eq(hamming_weight_term(start, n_qubits), hamming_weight_term(at, n_qubits))
    raise EncodeError(f"unsupported condition {cond!r}")


def count_symbols(obj) -> tuple[int, int]:
    """``(distinct variables, top-level conjuncts)`` of a formula or VC."""
    if hasattr(obj, "declarations") and hasattr(obj, "assertions"):
        return len(obj.declarations), len(obj.assertions)
    if isinstance(obj, Formula):
        return len(free_vars(obj)), sum(1 for _ in flatten_and([obj]))
    raise TypeError(f"cannot count symbols of {type(obj).__name__}")

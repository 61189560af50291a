"""Verification conditions for Hoare triples over circuits.

A verification condition (VC) is a set of assertions ``antecedent /\\ not
consequent``; it is unsatisfiable exactly when the antecedent entails the
consequent.  Four ways of producing VCs are provided:

* :func:`make_monolithic` -- the whole circuit in one VC;
* :func:`make_compositional` -- one VC per segment, chained by assumptions;
* :func:`make_wp_chain` -- assumptions computed by backward substitution,
  leaving only the precondition check;
* :func:`locality_reduce` -- Hamming-weight preservation reduced to one
  small VC per distinct gate.

Parameterised ``h4`` blocks with a symbolic angle are over-approximated by
free ``s``/``c`` variables unless the TRIG dialect asks for the exact trig
form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .circuit import Circuit, Gate, GateApplication
from .encode import (
    DIALECTS,
    Always,
    Condition,
    EncodeError,
    HammingWeightPreserved,
    RationalApprox,
    SqrtHalfMode,
    StepConstraint,
    Surface,
    encode_condition,
    encode_matrix_step,
    h4_matrix,
    hamming_weight_term,
    surface,
    symbolic_matrix,
)
from .formula import (
    ONE,
    ZERO,
    Formula,
    Not,
    Raw,
    Var,
    add,
    eq,
    flatten_and,
    free_vars,
    has_trig,
    is_linear,
    le,
    mul,
    substitute,
)

LOGICS = ("QF_LRA", "QF_NRA", "TRIG")
HW_IN = Var("hw_in")
HW_OUT = Var("hw_out")

LOCALITY_LEMMA = (
    "locality: a 1- or 2-qubit gate that preserves expected Hamming weight on its own "
    "qubits preserves the total expected Hamming weight of any larger register "
    "(trusted meta-step, not checked by the solver)"
)


class VCGenError(ValueError):
    pass


@dataclass(frozen=True)
class HoareTriple:
    pre: Condition
    circuit: Circuit
    post: Condition | Raw


@dataclass(frozen=True)
class VerificationCondition:
    """Assertions ``antecedent /\\ not consequent`` plus metadata.

    ``antecedent`` is stored flattened into its top-level conjuncts.
    """

    name: str
    logic: str
    declarations: tuple[str, ...]
    antecedent: tuple[Formula, ...]
    consequent: Formula
    obligation: str = ""
    approximate: bool = False

    @property
    def assertions(self) -> tuple[Formula, ...]:
        return self.antecedent + (Not(self.consequent),)

    @property
    def n_vars(self) -> int:
        return len(self.declarations)

    @property
    def n_assertions(self) -> int:
        return len(self.assertions)

    @property
    def is_trig(self) -> bool:
        return self.logic == "TRIG"


def detect_logic(formulas: Iterable[Formula]) -> str:
    formulas = list(formulas)
    if any(has_trig(f) for f in formulas):
        return "TRIG"
    if any(isinstance(g, Raw) for f in formulas for g in flatten_and([f])):
        return "QF_NRA"
    if all(is_linear(f) for f in formulas):
        return "QF_LRA"
    return "QF_NRA"


def make_vc(name: str, antecedent: Sequence[Formula], consequent: Formula, *,
            side: Sequence[Formula] = (), obligation: str = "",
            approximate: bool = False, declare: Iterable[str] = ()) -> VerificationCondition:
    """Assemble a VC.

    ``side`` holds background constraints (abstraction bounds, the exact
    ``1/sqrt(2)`` definition); each is kept only when it shares a variable
    with the rest of the VC.  ``declare`` adds declarations that need not
    occur in any assertion.
    """
    body = [f for f in flatten_and(antecedent)]
    used = set(free_vars(consequent))
    for f in body:
        used |= free_vars(f)
    kept = []
    for f in flatten_and(side):
        if free_vars(f) & used and f not in kept:
            kept.append(f)
    ante = tuple(kept + body)
    all_formulas = list(ante) + [consequent]
    decls = set(declare)
    for f in all_formulas:
        decls |= free_vars(f)
    return VerificationCondition(
        name=name,
        logic=detect_logic(all_formulas),
        declarations=tuple(sorted(decls)),
        antecedent=ante,
        consequent=consequent,
        obligation=obligation,
        approximate=approximate and bool(decls),
    )


# -- abstraction ------------------------------------------------------------


@dataclass(frozen=True)
class AbstractParams:
    """Relaxation variables of one ``h4`` parameter: ``0 <= s, c <= 1``, ``s^2 + c^2 = 1``."""

    param: str
    s: Var
    c: Var

    @classmethod
    def for_param(cls, param: str) -> "AbstractParams":
        return cls(param, Var(f"s_{param}"), Var(f"c_{param}"))

    def constraints(self) -> list[Formula]:
        s, c = self.s, self.c
        return [le(ZERO, s), le(s, ONE), le(ZERO, c), le(c, ONE),
                eq(add(mul(s, s), mul(c, c)), ONE)]


def abstract_h4_step(app: GateApplication, n_qubits: int, from_step: int | None = None,
                     to_step: int | None = None, prev: Surface | None = None,
                     elide: bool = False) -> tuple[StepConstraint, AbstractParams]:
    """Encode an ``h4`` block with its trig entries replaced by free ``s``, ``c``."""
    if app.gate.kind != "h4" or len(app.qubits) != 2:
        raise VCGenError("abstract_h4_step needs a two-qubit h4 application")
    param = app.gate.symbol() or f"b{app.step}"
    params = AbstractParams.for_param(param)
    from_step = app.step if from_step is None else from_step
    to_step = from_step + 1 if to_step is None else to_step
    if prev is None:
        prev = surface(n_qubits, from_step)
    step = encode_matrix_step(h4_matrix(params.c, params.s), app.qubits, n_qubits, prev,
                              to_step, elide)
    return step, params


# -- circuit encoding -------------------------------------------------------


@dataclass
class Encoding:
    n_qubits: int
    start: int
    steps: list[StepConstraint]
    surfaces: list[Surface]
    side: list[Formula] = field(default_factory=list)

    @property
    def final(self) -> Surface:
        return self.surfaces[-1]

    def equalities(self) -> list[Formula]:
        return [e for s in self.steps for e in s.equalities]

    def step_variables(self) -> set[str]:
        """Every amplitude variable of every encoded step, elided or not."""
        out = set()
        for j in range(self.start, self.start + len(self.steps) + 1):
            for re, im in surface(self.n_qubits, j):
                out |= {re.name, im.name}
        return out


def _uses_abstraction(gate: Gate, dialect: str, abstract: bool | None) -> bool:
    if gate.kind != "h4":
        return False
    if abstract is True:
        return True
    if abstract is False:
        return False
    return gate.is_symbolic and dialect != "TRIG"


def encode_circuit(circuit: Circuit, start: int = 0, stop: int | None = None, *,
                   dialect: str = "NRA", sqrt_mode: SqrtHalfMode = RationalApprox(),
                   elide: bool = False, abstract: bool | None = None,
                   start_surface: Surface | None = None) -> Encoding:
    """Encode steps ``[start, stop)`` of ``circuit``.

    ``abstract`` selects the treatment of ``h4`` blocks: ``None`` relaxes
    symbolic blocks outside TRIG, ``True`` relaxes every block, ``False``
    never relaxes.
    """
    if dialect not in DIALECTS:
        raise VCGenError(f"unknown dialect {dialect!r}")
    if abstract is True and dialect == "TRIG":
        raise VCGenError("the TRIG dialect and the h4 relaxation are mutually exclusive")
    stop = len(circuit.ops) if stop is None else stop
    n = circuit.n_qubits
    surf = start_surface if start_surface is not None else surface(n, start)
    enc = Encoding(n, start, [], [surf], list(sqrt_mode.side_conditions()))
    seen_params: set[str] = set()
    for op in circuit.ops[start:stop]:
        to_step = op.step + 1
        if _uses_abstraction(op.gate, dialect, abstract):
            step, params = abstract_h4_step(op, n, op.step, to_step, surf, elide)
            if params.param not in seen_params:
                seen_params.add(params.param)
                enc.side.extend(params.constraints())
        else:
            try:
                matrix = symbolic_matrix(op.gate, sqrt_mode, dialect)
            except EncodeError as exc:
                raise VCGenError(f"step {op.step}: {exc}") from exc
            step = encode_matrix_step(matrix, op.qubits, n, surf, to_step, elide)
        enc.steps.append(step)
        surf = step.surface
        enc.surfaces.append(surf)
    return enc


def _condition(cond, at: Surface, n: int, start: Surface) -> Formula:
    if isinstance(cond, Raw):
        return cond
    return encode_condition(cond, at, n, start)


def _approx(circuit: Circuit, sqrt_mode: SqrtHalfMode, start=0, stop=None) -> bool:
    return sqrt_mode.approximate and any(op.gate.kind == "h" for op in circuit.ops[start:stop])


# -- strategies -------------------------------------------------------------


def make_monolithic(triple: HoareTriple, dialect: str = "NRA",
                    sqrt_mode: SqrtHalfMode = RationalApprox(), *, elide: bool = False,
                    abstract: bool | None = None, name: str = "monolithic",
                    hw_aux: bool = True) -> VerificationCondition:
    """Single VC asserting ``P /\\ C /\\ not Q``.

    For Hamming-weight posts the two weights are bound to auxiliary
    variables ``hw_in``/``hw_out`` unless ``hw_aux`` is false.
    """
    c = triple.circuit
    enc = encode_circuit(c, dialect=dialect, sqrt_mode=sqrt_mode, elide=elide, abstract=abstract)
    pre = _condition(triple.pre, enc.surfaces[0], c.n_qubits, enc.surfaces[0])
    ante = [pre, *enc.equalities()]
    if isinstance(triple.post, HammingWeightPreserved) and hw_aux:
        ante += [eq(HW_IN, hamming_weight_term(enc.surfaces[0], c.n_qubits)),
                 eq(HW_OUT, hamming_weight_term(enc.final, c.n_qubits))]
        post = eq(HW_IN, HW_OUT)
    else:
        post = _condition(triple.post, enc.final, c.n_qubits, enc.surfaces[0])
    return make_vc(name, ante, post, side=enc.side, obligation="P /\\ C |= Q",
                   approximate=_approx(c, sqrt_mode), declare=enc.step_variables())


def weakest_precondition(circuit: Circuit, post: Formula, start: int = 0, stop: int | None = None,
                         *, dialect: str = "NRA", sqrt_mode: SqrtHalfMode = RationalApprox(),
                         abstract: bool | None = None) -> Formula:
    """Push ``post`` backwards through steps ``[start, stop)``.

    Each gate step defines every output variable by one equality, so the
    precondition is obtained by substituting those definitions into
    ``post``, last gate first.  Variables of relaxed ``h4`` blocks stay
    free in the result.
    """
    enc = encode_circuit(circuit, start, stop, dialect=dialect, sqrt_mode=sqrt_mode,
                         abstract=abstract)
    out = post
    for step in reversed(enc.steps):
        out = substitute(out, step.definitions())
    return out


def _segment_assumptions(triple: HoareTriple, dialect, sqrt_mode, abstract) -> list[Formula]:
    c = triple.circuit
    s0 = surface(c.n_qubits, 0)
    post = _condition(triple.post, surface(c.n_qubits, len(c.ops)), c.n_qubits, s0)
    if isinstance(post, Raw):
        raise VCGenError("raw postconditions cannot be pushed through weakest preconditions")
    out = []
    for start, stop in reversed(c.segments()):
        post = weakest_precondition(c, post, start, stop, dialect=dialect, sqrt_mode=sqrt_mode,
                                    abstract=abstract)
        out.append(post)
    return out[::-1]


def _side_for(c: Circuit, dialect, sqrt_mode, abstract) -> list[Formula]:
    return encode_circuit(c, dialect=dialect, sqrt_mode=sqrt_mode, abstract=abstract).side


def make_compositional(triple: HoareTriple, assumptions: Sequence[Formula] | None = None,
                       dialect: str = "NRA", sqrt_mode: SqrtHalfMode = RationalApprox(), *,
                       abstract: bool | None = None,
                       prefix: str = "") -> list[VerificationCondition]:
    """Assume-guarantee VCs ``P |= A1``, ``Ai /\\ Ci |= Ai+1``, ``An /\\ Cn |= Q``.

    Assumption ``Ai`` is stated over the amplitudes entering segment ``i``.
    Without explicit assumptions they are the weakest preconditions of the
    remaining circuit.
    """
    c = triple.circuit
    segs = c.segments()
    if assumptions is None:
        assumptions = _segment_assumptions(triple, dialect, sqrt_mode, abstract)
    if len(assumptions) != len(segs):
        raise VCGenError(f"{len(segs)} segment(s) need {len(segs)} assumption(s), "
                         f"got {len(assumptions)}")
    s0 = surface(c.n_qubits, 0)
    side = _side_for(c, dialect, sqrt_mode, abstract)
    pre = _condition(triple.pre, s0, c.n_qubits, s0)
    vcs = [make_vc(f"{prefix}P+A1", [pre], assumptions[0], side=side, obligation="P |= A1",
                   approximate=_approx(c, sqrt_mode))]
    for i, (start, stop) in enumerate(segs):
        enc = encode_circuit(c, start, stop, dialect=dialect, sqrt_mode=sqrt_mode,
                             abstract=abstract)
        if i + 1 < len(segs):
            goal, label = assumptions[i + 1], f"A{i + 2}"
        else:
            goal = _condition(triple.post, enc.final, c.n_qubits, s0)
            label = "Q"
        vcs.append(make_vc(f"{prefix}C{i + 1}", [assumptions[i], *enc.equalities()], goal,
                           side=side, obligation=f"A{i + 1} /\\ C{i + 1} |= {label}",
                           approximate=_approx(c, sqrt_mode), declare=enc.step_variables()))
    return vcs


def make_wp_chain(triple: HoareTriple, dialect: str = "NRA",
                  sqrt_mode: SqrtHalfMode = RationalApprox(), *, abstract: bool | None = None,
                  audit: bool = False, prefix: str = "") -> list[VerificationCondition]:
    """Weakest-precondition proof: only ``P |= wp(C, Q)`` goes to the solver.

    With ``audit`` the per-segment VCs (valid by construction) are appended.
    """
    c = triple.circuit
    if not c.ops:
        s0 = surface(c.n_qubits, 0)
        pre = _condition(triple.pre, s0, c.n_qubits, s0)
        post = _condition(triple.post, s0, c.n_qubits, s0)
        return [make_vc(f"{prefix}P+A1", [pre], post, obligation="P |= Q")]
    assumptions = _segment_assumptions(triple, dialect, sqrt_mode, abstract)
    vcs = make_compositional(triple, assumptions, dialect, sqrt_mode, abstract=abstract,
                             prefix=prefix)
    return vcs if audit else vcs[:1]


# -- locality ---------------------------------------------------------------


def _locality_key(gate: Gate, abstract: bool | None):
    if gate.kind == "h4" and _uses_abstraction(gate, "NRA", abstract):
        return ("h4", "<abstract>")
    return (gate.kind, gate.param)


@dataclass
class LocalityReduction:
    vcs: list[VerificationCondition]
    gates: list[Gate]
    applications: dict[str, list[int]]
    trusted_steps: list[str]


def locality_reduce(triple: HoareTriple, *, dedup: bool = True, dialect: str = "NRA",
                    sqrt_mode: SqrtHalfMode = RationalApprox(),
                    abstract: bool | None = None) -> LocalityReduction:
    """Reduce n-qubit Hamming-weight preservation to per-gate obligations.

    One local VC is produced per distinct gate (kind and parameter; all
    relaxed ``h4`` blocks share one form).  If every local VC holds, the
    locality lemma lifts the property to the whole circuit.
    """
    if not isinstance(triple.post, HammingWeightPreserved):
        raise VCGenError("locality reduction only supports Hamming-weight preservation")
    c = triple.circuit
    groups: dict[object, list[GateApplication]] = {}
    for op in c.ops:
        if len(op.qubits) > 2:
            raise VCGenError("locality reduction needs 1- and 2-qubit gates")
        key = _locality_key(op.gate, abstract) if dedup else ("op", op.step)
        groups.setdefault(key, []).append(op)
    vcs, gates, apps = [], [], {}
    for ops in groups.values():
        gate = ops[0].gate
        arity = len(ops[0].qubits)
        local = Circuit.from_gates(arity, [(gate, tuple(range(arity)))])
        name = f"local {gate!r}" if dedup else f"local {gate!r} @ step {ops[0].step}"
        vc = make_monolithic(HoareTriple(Always(), local, HammingWeightPreserved()), dialect,
                             sqrt_mode, abstract=abstract, name=name)
        vcs.append(vc)
        gates.append(gate)
        apps[name] = [op.step for op in ops]
    return LocalityReduction(vcs, gates, apps, [LOCALITY_LEMMA])


# -- fabric prefixes --------------------------------------------------------


def make_fabric_prefix_vc(fabric: Circuit, k: int, *, elide: bool = True,
                          name: str | None = None) -> VerificationCondition:
    """Hamming-weight preservation over the first ``k`` ``h4`` blocks.

    The fabric must be in abstract mode.  Pass-through rows are elided by
    default: each block then contributes exactly the equalities of the
    amplitudes it mixes.
    """
    blocks = [op.step for op in fabric.ops if op.gate.kind == "h4"]
    if not blocks or len(blocks) != len(fabric.ops):
        raise VCGenError("fabric prefix VCs need an abstract (h4-only) fabric")
    if not 1 <= k <= len(blocks):
        raise VCGenError(f"k must be in [1, {len(blocks)}], got {k}")
    prefix = fabric.slice(0, blocks[k - 1] + 1)
    label = name or f"H(2^{fabric.n_qubits}), {k}/{len(blocks)}"
    return make_monolithic(HoareTriple(Always(), prefix, HammingWeightPreserved()), "NRA",
                           elide=elide, abstract=True, name=label)


# -- reporting --------------------------------------------------------------


def proof_report(strategy: str, vcs: Sequence[VerificationCondition], statuses: Sequence[str],
                 trusted_steps: Sequence[str] = (), extra: dict | None = None) -> dict:
    report = {
        "strategy": strategy,
        "obligations": [
            {"name": vc.name, "logic": vc.logic, "status": st,
             "vars": vc.n_vars, "assertions": vc.n_assertions, "obligation": vc.obligation}
            for vc, st in zip(vcs, statuses)
        ],
        "trusted_steps": list(trusted_steps),
    }
    if extra:
        report.update(extra)
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"

"""Command-line interface: ``qver generate | verify | bench | simulate``.

Exit codes: 0 all obligations hold, 1 some obligation refuted, 2 usage or
configuration error, 3 unknown, timeout or not dispatched.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import (
    Circuit,
    CircuitError,
    KickedIsingParams,
    build_bell_circuit,
    build_fabric,
    build_kicked_ising,
    fabric_layout,
    load_circuit,
    save_circuit,
)
from .encode import (
    Always,
    BasisInput,
    ExactVar,
    HammingWeightPreserved,
    RationalApprox,
    Subspace,
    basis_label,
)
from .formula import Raw
from .oracle import OracleError, StateVector, expected_hamming_weight, run
from .smt import (
    SolverConfig,
    SolverConfigError,
    Status,
    results_markdown,
    run_bench,
    run_solver,
    solver_version,
    write_smtlib,
)
from .suites import SUITES
from .vcgen import (
    HoareTriple,
    VCGenError,
    dump_report,
    locality_reduce,
    make_compositional,
    make_monolithic,
    make_wp_chain,
    proof_report,
)

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_UNDECIDED = 0, 1, 2, 3
DEFAULT_OUT = "qver-out"


class UsageError(Exception):
    pass


# -- property mini-language -------------------------------------------------

_BITS = re.compile(r"[01]+")
_AMP = re.compile(r"\bc_[01]+_\d+_(?:re|im)\b")


def parse_property(text: str):
    """``input-basis 00``, ``subspace {00,11}`` (or ``00,11``), ``hw-preserved``, ``true``."""
    words = text.strip().split(None, 1)
    if not words:
        raise UsageError("empty property")
    head, rest = words[0], (words[1] if len(words) > 1 else "")
    if head == "true" and not rest:
        return Always()
    if head == "hw-preserved" and not rest:
        return HammingWeightPreserved()
    if head == "input-basis":
        bits = rest.strip()
        if not _BITS.fullmatch(bits):
            raise UsageError(f"input-basis needs a bitstring, got {rest!r}")
        return BasisInput(bits)
    if head in ("subspace", "subspace-normalized"):
        body = rest.strip().strip("{}")
        labels = [b.strip() for b in body.split(",") if b.strip()]
        if not all(_BITS.fullmatch(b) for b in labels):
            raise UsageError(f"subspace needs comma-separated bitstrings, got {rest!r}")
        return Subspace(labels, normalized=head == "subspace-normalized")
    raise UsageError(f"cannot parse property {text!r}")


def _check_width(prop, n_qubits: int, which: str) -> None:
    labels = []
    if isinstance(prop, BasisInput):
        labels = [prop.bits]
    elif isinstance(prop, Subspace):
        labels = list(prop.allowed)
    for b in labels:
        if len(b) != n_qubits:
            raise UsageError(f"--{which}: label {b!r} does not fit a {n_qubits}-qubit circuit")


def parse_bindings(items) -> dict[str, float] | float | None:
    """``--lambda`` values: one bare number for every parameter, or ``name=value`` pairs."""
    if not items:
        return None
    named: dict[str, float] = {}
    bare = None
    for it in items:
        try:
            if "=" in it:
                k, v = it.split("=", 1)
                named[k.strip()] = float(v)
            else:
                bare = float(it)
        except ValueError:
            raise UsageError(f"bad --lambda value {it!r}") from None
    if bare is not None and named:
        raise UsageError("mix of bare and named --lambda values")
    return bare if bare is not None else named


def _bind(circuit: Circuit, items) -> Circuit:
    b = parse_bindings(items)
    if b is None:
        return circuit
    if isinstance(b, float):
        b = {s: b for s in circuit.symbols()}
    return circuit.bind(b)


# -- manifest ---------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    tool_version: str = __version__
    seed: int | None = None
    solver: dict = field(default_factory=dict)
    strategy: str | None = None
    inputs: list[str] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    verdicts: dict[str, str] = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.__dict__, indent=2) + "\n", encoding="utf-8")
        return path


def _solver_config(args, workdir: Path) -> SolverConfig:
    kw = {"timeout": args.timeout, "workdir": workdir,
          "dispatch_trig": args.dispatch_trig, "trig_axioms": args.trig_axioms}
    if args.solver:
        kw["command"] = args.solver
    return SolverConfig.from_env(**kw)


def _solver_meta(cfg: SolverConfig) -> dict:
    return {"command": list(cfg.command), "timeout": cfg.timeout,
            "options": "solver defaults", "trig_axioms": cfg.trig_axioms}


# -- commands ---------------------------------------------------------------


def cmd_generate(args) -> int:
    try:
        if args.family == "bell":
            circuit = build_bell_circuit()
        elif args.family == "fabric":
            blocks = len(fabric_layout(args.qubits, args.layers))
            lambdas = None
            if args.shared_lambda:
                lambdas = ["lambda"] * blocks
            elif args.lambda_value is not None:
                lambdas = [args.lambda_value] * blocks
            circuit = build_fabric(args.qubits, args.layers, lambdas, mode=args.mode)
        else:
            if args.L is None:
                raise UsageError("kicked-ising needs --L")
            params = KickedIsingParams.sample(args.L, args.seed, g=args.g, T=args.T)
            circuit = build_kicked_ising(params)
    except CircuitError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = Path(args.out) if args.out else out_dir / f"{args.family}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_circuit(circuit, out)
    RunManifest("generate", seed=getattr(args, "seed", None), artifacts=[str(out)],
                options={k: v for k, v in vars(args).items() if k != "func"}).write(out_dir)
    print(f"wrote {out} ({circuit.n_qubits} qubits, {len(circuit.ops)} gates)")
    return EXIT_OK


def _build_vcs(args, circuit: Circuit, pre, post):
    sqrt_mode = ExactVar() if args.sqrt_mode == "exact" else RationalApprox()
    triple = HoareTriple(pre, circuit, post)
    trusted: list[str] = []
    s = args.strategy
    if isinstance(post, Raw) and s != "monolithic":
        raise UsageError("--post-raw only works with --strategy monolithic")
    if s == "monolithic":
        vcs = [make_monolithic(triple, args.dialect, sqrt_mode)]
    elif s == "compositional":
        vcs = make_compositional(triple, None, args.dialect, sqrt_mode)
    elif s == "wp":
        vcs = make_wp_chain(triple, args.dialect, sqrt_mode, audit=args.audit)
        trusted.append("weakest preconditions A1..An computed by syntactic substitution")
    else:
        red = locality_reduce(triple, dialect=args.dialect, sqrt_mode=sqrt_mode)
        vcs = red.vcs
        trusted += red.trusted_steps
    return vcs, trusted


def _print_model(vc, model) -> None:
    print(f"  witness for {vc.name}:")
    shown = 0
    for name in sorted(model):
        v = model[name]
        if v != 0:
            print(f"    {name} = {float(v):.9g}")
            shown += 1
    if not shown:
        print("    (all variables zero)")


def cmd_verify(args) -> int:
    try:
        circuit = _bind(load_circuit(args.circuit), args.lambda_values)
    except (CircuitError, OSError) as exc:
        raise UsageError(f"cannot load {args.circuit}: {exc}") from exc
    pre = parse_property(args.pre)
    if args.post_raw:
        post = Raw(args.post_raw, tuple(sorted(set(_AMP.findall(args.post_raw)))))
        print("note: --post-raw is passed to the solver unchecked")
    elif args.post:
        post = parse_property(args.post)
    else:
        raise UsageError("verify needs --post or --post-raw")
    for prop, which in ((pre, "pre"), (post, "post")):
        _check_width(prop, circuit.n_qubits, which)
    if isinstance(pre, HammingWeightPreserved):
        raise UsageError("hw-preserved is a postcondition")
    if args.strategy == "locality" and not isinstance(post, HammingWeightPreserved):
        raise UsageError("--strategy locality needs --post hw-preserved")
    try:
        vcs, trusted = _build_vcs(args, circuit, pre, post)
    except (VCGenError, ValueError) as exc:
        raise UsageError(str(exc)) from exc

    out_dir = Path(args.out_dir)
    cfg = _solver_config(args, out_dir / "smt2")
    if any(not vc.is_trig or cfg.dispatch_trig for vc in vcs):
        try:
            cfg.resolve()
        except SolverConfigError as exc:
            raise UsageError(str(exc)) from exc

    statuses, paths = [], []
    worst = EXIT_OK
    for vc in vcs:
        v = run_solver(vc, cfg)
        statuses.append(v.status.value)
        if v.path is None:
            v.path = write_smtlib(vc, cfg.workdir, get_model=cfg.get_model,
                                  trig_axioms=cfg.trig_axioms)
        paths.append(str(v.path))
        secs = "" if v.seconds is None else f" ({v.seconds:.3f} s)"
        print(f"{vc.name}: {v.status.value}{secs}  [{vc.logic}, {vc.n_vars} vars, "
              f"{vc.n_assertions} assertions]")
        if v.status is Status.REFUTED:
            worst = EXIT_REFUTED
            _print_model(vc, v.model)
        elif v.status is not Status.HOLDS and worst == EXIT_OK:
            worst = EXIT_UNDECIDED
            if v.status is Status.ERROR and v.stderr:
                print(v.stderr.strip(), file=sys.stderr)

    extra = {}
    if args.strategy == "locality":
        extra["result"] = "FAILED" if worst == EXIT_REFUTED else (
            "HOLDS" if worst == EXIT_OK else "UNDECIDED")
        print(f"locality reduction: {extra['result']}")
    report = proof_report(args.strategy, vcs, statuses, trusted, extra)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dump_report(report), encoding="utf-8")
    RunManifest("verify", solver=_solver_meta(cfg), strategy=args.strategy,
                inputs=[str(args.circuit)], artifacts=paths,
                verdicts={vc.name: st for vc, st in zip(vcs, statuses)},
                options={"pre": args.pre, "post": args.post, "post_raw": args.post_raw,
                         "dialect": args.dialect, "sqrt_mode": args.sqrt_mode,
                         "lambda": args.lambda_values}).write(out_dir)
    return worst


def cmd_bench(args) -> int:
    suite = SUITES[args.suite]()
    if args.only:
        wanted = set(args.only)
        suite = [row for row in suite if row[0] in wanted]
        missing = wanted - {name for name, _ in suite}
        if missing:
            raise UsageError(f"no such row(s): {', '.join(sorted(missing))}")
    out_dir = Path(args.out_dir)
    cfg = _solver_config(args, out_dir / "smt2")
    try:
        cfg.resolve()
    except SolverConfigError as exc:
        raise UsageError(str(exc)) from exc
    records = run_bench(suite, cfg, repetitions=args.repetitions, jobs=args.jobs,
                        out_dir=out_dir)
    print(results_markdown(records), end="")
    meta = _solver_meta(cfg)
    meta["version"] = solver_version(cfg)
    RunManifest("bench", solver=meta, strategy=args.suite,
                artifacts=[str(out_dir / "results.csv"), str(out_dir / "results.md")],
                verdicts={r.example: r.verdict.value for r in records},
                options={"only": args.only, "repetitions": args.repetitions}).write(out_dir)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        circuit = _bind(load_circuit(args.circuit), args.lambda_values)
    except (CircuitError, OSError) as exc:
        raise UsageError(f"cannot load {args.circuit}: {exc}") from exc
    if circuit.symbols():
        raise UsageError(f"unbound parameters {circuit.symbols()}; pass --lambda")
    n = circuit.n_qubits
    if args.input == "random":
        state = StateVector.random(n, np.random.default_rng(args.seed))
    else:
        if not _BITS.fullmatch(args.input) or len(args.input) != n:
            raise UsageError(f"--input must be a {n}-bit string or 'random'")
        state = StateVector.basis(args.input)
    try:
        out = run(circuit, state)
    except OracleError as exc:
        raise UsageError(str(exc)) from exc
    for i, a in enumerate(out.amps):
        if abs(a) > 1e-12:
            print(f"{basis_label(i, n)}  {a.real:+.12f} {a.imag:+.12f}i")
    if args.report == "hw":
        print(f"HW(in)  = {expected_hamming_weight(state):.12f}")
        print(f"HW(out) = {expected_hamming_weight(out):.12f}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _solver_flags(p) -> None:
    p.add_argument("--timeout", type=float, default=1800.0, help="seconds per solver call")
    p.add_argument("--solver", help="solver command template (default: z3 -T:{timeout} {file})")
    p.add_argument("--dispatch-trig", action="store_true",
                   help="also send TRIG conditions to the solver")
    p.add_argument("--trig-axioms", action="store_true",
                   help="declare sin/cos uninterpreted with bounds")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qver", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qver {__version__}")
    p.add_argument("--out-dir", default=DEFAULT_OUT, help="where outputs go (default ./qver-out)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a circuit file")
    g.add_argument("family", choices=["bell", "fabric", "kicked-ising"])
    g.add_argument("--out", help="circuit path (default <out-dir>/<family>.json)")
    g.add_argument("--qubits", type=int, default=6)
    g.add_argument("--layers", type=int, default=4)
    g.add_argument("--mode", choices=["abstract", "decomposed"], default="abstract")
    g.add_argument("--shared-lambda", action="store_true",
                   help="drive every block with the one parameter 'lambda'")
    g.add_argument("--lambda", dest="lambda_value", type=float,
                   help="numeric angle for every block")
    g.add_argument("--L", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--g", type=float, default=1.0)
    g.add_argument("--T", type=float, default=1.0)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="prove a Hoare triple")
    v.add_argument("circuit")
    v.add_argument("--pre", default="true")
    v.add_argument("--post")
    v.add_argument("--post-raw", help="raw SMT-LIB formula over final amplitudes (unchecked)")
    v.add_argument("--strategy", choices=["monolithic", "compositional", "wp", "locality"],
                   default="monolithic")
    v.add_argument("--dialect", choices=["LRA", "NRA", "TRIG"], default="NRA")
    v.add_argument("--sqrt-mode", choices=["rational", "exact"], default="rational")
    v.add_argument("--audit", action="store_true", help="wp: also emit the segment VCs")
    v.add_argument("--lambda", dest="lambda_values", action="append",
                   help="bind parameters: a number for all, or name=value (repeatable)")
    _solver_flags(v)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", choices=sorted(SUITES), default="table1")
    b.add_argument("--only", action="append", help="row name to keep (repeatable)")
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--jobs", type=int, default=1)
    _solver_flags(b)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("simulate", help="run a concrete circuit on the state-vector oracle")
    s.add_argument("circuit")
    s.add_argument("--input", default=None, help="basis bitstring or 'random'")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--report", choices=["amplitudes", "hw"], default="hw")
    s.add_argument("--lambda", dest="lambda_values", action="append")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "simulate" and args.input is None:
        try:
            args.input = "0" * load_circuit(args.circuit).n_qubits
        except (CircuitError, OSError) as exc:
            print(f"qver: error: cannot load {args.circuit}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for name in ("timeout",):
        if hasattr(args, name) and not getattr(args, name) > 0:
            print("qver: error: --timeout must be positive", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qver: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

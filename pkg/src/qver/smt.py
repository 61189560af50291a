"""SMT-LIB2 rendering and an external-process solver driver."""

from __future__ import annotations

import csv
import enum
import io
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .formula import Raw, Trig, holds, to_smtlib, trig_atoms
from .vcgen import VerificationCondition

DEFAULT_COMMAND = ("z3", "-T:{timeout}", "{file}")
DEFAULT_TIMEOUT = 1800.0
KILL_GRACE = 1.0
MODEL_TOL = 1e-6
SOLVER_ENV = "QVER_SOLVER"


class SolverConfigError(RuntimeError):
    """The solver cannot be run at all (bad command, bad timeout)."""


class RenderError(ValueError):
    pass


class Status(str, enum.Enum):
    HOLDS = "Holds"
    REFUTED = "Refuted"
    UNKNOWN = "Unknown"
    TIMEOUT = "Timeout"
    EMITTED_ONLY = "EmittedOnly"
    ERROR = "SolverError"

    def __str__(self):
        return self.value


# Table marks; the emitted-only mark stands in for "did not attempt to solve"
TABLE_MARKS = {
    Status.HOLDS: "✓",
    Status.REFUTED: "✗",
    Status.UNKNOWN: "unknown",
    Status.TIMEOUT: "Timeout",
    Status.EMITTED_ONLY: "DNS-equivalent",
    Status.ERROR: "error",
}


@dataclass(frozen=True)
class SolverConfig:
    """How to launch the solver.

    ``command`` is an argument template; ``{file}``, ``{timeout}`` (whole
    seconds) and ``{timeout_ms}`` are substituted per call.  A template
    without ``{file}`` gets the file appended.
    """

    command: tuple[str, ...] = DEFAULT_COMMAND
    timeout: float = DEFAULT_TIMEOUT
    logic_override: str | None = None
    workdir: Path | None = None
    get_model: bool = True
    dispatch_trig: bool = False
    trig_axioms: bool = False

    def __post_init__(self):
        if not self.timeout > 0:
            raise SolverConfigError(f"timeout must be positive, got {self.timeout}")
        if isinstance(self.command, str):
            object.__setattr__(self, "command", tuple(shlex.split(self.command)))
        if not self.command:
            raise SolverConfigError("empty solver command")

    @classmethod
    def from_env(cls, **kw) -> "SolverConfig":
        cmd = os.environ.get(SOLVER_ENV)
        if cmd and "command" not in kw:
            kw["command"] = tuple(shlex.split(cmd))
        return cls(**kw)

    def argv(self, path: Path) -> list[str]:
        secs = max(1, int(-(-self.timeout // 1)))
        subs = {"file": str(path), "timeout": str(secs),
                "timeout_ms": str(int(self.timeout * 1000))}
        out = [part.format(**subs) for part in self.command]
        if not any("{file}" in part for part in self.command):
            out.append(str(path))
        return out

    def resolve(self) -> str:
        exe = shutil.which(self.command[0])
        if exe is None:
            raise SolverConfigError(f"solver executable {self.command[0]!r} not found "
                                    f"(set ${SOLVER_ENV} or pass --solver)")
        return exe


@dataclass
class SolverVerdict:
    status: Status
    seconds: float | None = None
    model: dict[str, Fraction] = field(default_factory=dict)
    stdout: str = ""
    stderr: str = ""
    path: Path | None = None

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS


@dataclass
class BenchRecord:
    example: str
    n_vars: int
    n_assertions: int
    logic: str
    verdict: Status
    seconds: float | None
    repetitions: int
    times: list[float] = field(default_factory=list)


# -- rendering --------------------------------------------------------------


def _trig_axioms(atoms: set[Trig]) -> list[str]:
    out = []
    args = sorted({to_smtlib(t.arg) for t in atoms})
    for a in args:
        s, c = f"(sin {a})", f"(cos {a})"
        out += [f"(<= (- 1.0) {s})", f"(<= {s} 1.0)", f"(<= (- 1.0) {c})", f"(<= {c} 1.0)",
                f"(= (+ (* {s} {s}) (* {c} {c})) 1.0)"]
    return out


def render_smtlib(vc: VerificationCondition, *, get_model: bool = True,
                  trig_axioms: bool = False, logic_override: str | None = None) -> str:
    """Deterministic SMT-LIB2 script for ``vc``.

    TRIG conditions carry no ``set-logic``; by default ``sin``/``cos`` are
    left as raw applications for solvers that know them, with
    ``trig_axioms`` they are declared uninterpreted and bounded.
    """
    atoms: set[Trig] = set()
    for f in vc.assertions:
        atoms |= trig_atoms(f)
    if atoms and vc.logic != "TRIG":
        raise RenderError(f"{vc.name}: trig atoms in a {vc.logic} condition")
    lines = [f"; {vc.name}"]
    if vc.obligation:
        lines.append(f"; obligation: {vc.obligation}")
    if any(isinstance(f, Raw) for f in vc.assertions):
        lines.append("; contains raw SMT-LIB (unchecked)")
    logic = logic_override or vc.logic
    if logic != "TRIG":
        lines.append(f"(set-logic {logic})")
    for name in vc.declarations:
        lines.append(f"(declare-const {name} Real)")
    if atoms and trig_axioms:
        lines += ["(declare-fun sin (Real) Real)", "(declare-fun cos (Real) Real)"]
        lines += [f"(assert {a})" for a in _trig_axioms(atoms)]
    for f in vc.assertions:
        lines.append(f"(assert {to_smtlib(f)})")
    lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def safe_filename(name: str) -> str:
    keep = []
    for ch in name:
        if ch.isalnum() or ch in "-_.":
            keep.append(ch)
        elif ch in " /+^(),":
            keep.append("_")
    out = "".join(keep).strip("_.")
    while "__" in out:
        out = out.replace("__", "_")
    return out or "vc"


def write_smtlib(vc: VerificationCondition, directory: Path, **kw) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{safe_filename(vc.name)}.smt2"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_smtlib(vc, **kw))
    return path


# -- model parsing ----------------------------------------------------------


def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == '"':
            j = text.index('"', i + 1)
            yield text[i:j + 1]
            i = j + 1
        elif ch == "|":
            j = text.index("|", i + 1)
            yield text[i + 1:j]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _value(sx) -> Fraction:
    if isinstance(sx, str):
        return Fraction(sx)
    head, *rest = sx
    if head == "-" and len(rest) == 1:
        return -_value(rest[0])
    if head == "-":
        return _value(rest[0]) - sum((_value(r) for r in rest[1:]), Fraction(0))
    if head == "+":
        return sum((_value(r) for r in rest), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for r in rest:
            out *= _value(r)
        return out
    if head == "/":
        return _value(rest[0]) / _value(rest[1])
    if head == "root-obj":
        return _root_obj(rest[0], int(rest[1]))
    raise ValueError(f"cannot read value {sx!r}")


def _poly_coeffs(sx) -> dict[int, Fraction]:
    """Coefficients of a univariate polynomial in ``x`` written as an s-expression."""
    if isinstance(sx, str):
        if sx == "x":
            return {1: Fraction(1)}
        return {0: Fraction(sx)}
    head, *rest = sx
    if head == "+":
        out: dict[int, Fraction] = {}
        for r in rest:
            for k, v in _poly_coeffs(r).items():
                out[k] = out.get(k, 0) + v
        return out
    if head == "-":
        parts = [_poly_coeffs(r) for r in rest]
        if len(parts) == 1:
            return {k: -v for k, v in parts[0].items()}
        out = dict(parts[0])
        for p in parts[1:]:
            for k, v in p.items():
                out[k] = out.get(k, 0) - v
        return out
    if head == "*":
        out = {0: Fraction(1)}
        for r in rest:
            nxt: dict[int, Fraction] = {}
            for k1, v1 in out.items():
                for k2, v2 in _poly_coeffs(r).items():
                    nxt[k1 + k2] = nxt.get(k1 + k2, 0) + v1 * v2
            out = nxt
        return out
    if head == "^":
        base = _poly_coeffs(rest[0])
        out = {0: Fraction(1)}
        for _ in range(int(rest[1])):
            nxt = {}
            for k1, v1 in out.items():
                for k2, v2 in base.items():
                    nxt[k1 + k2] = nxt.get(k1 + k2, 0) + v1 * v2
            out = nxt
        return out
    if head == "/":
        num = _poly_coeffs(rest[0])
        den = _value(rest[1])
        return {k: v / den for k, v in num.items()}
    raise ValueError(f"cannot read polynomial {sx!r}")


def _root_obj(poly, index: int) -> Fraction:
    """The ``index``-th (1-based, ascending) real root, as a close rational."""
    coeffs = _poly_coeffs(poly)
    deg = max(coeffs)
    roots = np.roots([float(coeffs.get(k, 0)) for k in range(deg, -1, -1)])
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-9)
    return Fraction(real[index - 1]).limit_denominator(10 ** 15)


def parse_model(text: str) -> dict[str, Fraction]:
    """Read a model in ``define-fun`` or ``(name value)`` pair style."""
    model: dict[str, Fraction] = {}
    for top in parse_sexprs(text):
        if not isinstance(top, list):
            continue
        items = top[1:] if top and top[0] == "model" else top
        for it in items:
            if not isinstance(it, list) or not it:
                continue
            if it[0] == "define-fun" and len(it) == 5 and it[2] == []:
                model[it[1]] = _value(it[4])
            elif len(it) == 2 and isinstance(it[0], str):
                try:
                    model[it[0]] = _value(it[1])
                except (ValueError, ZeroDivisionError, IndexError):
                    pass
    return model


def check_model(vc: VerificationCondition, model: dict[str, Fraction],
                tol: float = MODEL_TOL) -> bool:
    """All assertions true under ``model`` (unassigned variables default to 0)."""
    env = {k: float(v) for k, v in model.items()}
    for f in vc.assertions:
        if isinstance(f, Raw):
            continue
        if not holds(f, env, tol, default=0.0):
            return False
    return True


# -- running ----------------------------------------------------------------


def _classify(stdout: str) -> tuple[Status | None, str]:
    lines = [ln.strip() for ln in stdout.splitlines() if ln.strip()]
    if not lines:
        return None, ""
    first = lines[0]
    rest = "\n".join(lines[1:])
    if first == "unsat":
        return Status.HOLDS, rest
    if first == "sat":
        return Status.REFUTED, rest
    if first == "unknown":
        return Status.UNKNOWN, rest
    if first == "timeout":
        return Status.TIMEOUT, rest
    return None, rest


def solve_file(path: Path, config: SolverConfig) -> SolverVerdict:
    """Run the solver on an existing ``.smt2`` file."""
    config.resolve()
    argv = config.argv(path)
    t0 = time.perf_counter()
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    except OSError as exc:
        raise SolverConfigError(f"cannot start solver: {exc}") from exc
    try:
        out, err = proc.communicate(timeout=config.timeout + KILL_GRACE)
    except subprocess.TimeoutExpired:
        proc.kill()
        out, err = proc.communicate()
        return SolverVerdict(Status.TIMEOUT, time.perf_counter() - t0, stdout=out or "",
                             stderr=err or "", path=path)
    secs = time.perf_counter() - t0
    status, rest = _classify(out)
    if status is None:
        if secs >= config.timeout:
            status = Status.TIMEOUT
        else:
            return SolverVerdict(Status.ERROR, secs, stdout=out, stderr=err, path=path)
    verdict = SolverVerdict(status, secs, stdout=out, stderr=err, path=path)
    if status is Status.REFUTED and rest:
        try:
            verdict.model = parse_model(rest)
        except (ValueError, IndexError, ZeroDivisionError):
            verdict.model = {}
    return verdict


def run_solver(vc: VerificationCondition, config: SolverConfig | None = None) -> SolverVerdict:
    """Render ``vc``, hand it to the solver and map the answer to a verdict.

    TRIG conditions are only written out unless ``dispatch_trig`` is set.
    """
    config = config or SolverConfig.from_env()
    if vc.is_trig and not config.dispatch_trig:
        if config.workdir is None:
            text = render_smtlib(vc, get_model=config.get_model, trig_axioms=config.trig_axioms)
            return SolverVerdict(Status.EMITTED_ONLY, None, stdout=text)
        path = write_smtlib(vc, config.workdir, get_model=config.get_model,
                            trig_axioms=config.trig_axioms)
        return SolverVerdict(Status.EMITTED_ONLY, None, path=path)
    config.resolve()
    kw = dict(get_model=config.get_model, trig_axioms=config.trig_axioms,
              logic_override=config.logic_override)
    if config.workdir is not None:
        return solve_file(write_smtlib(vc, config.workdir, **kw), config)
    with tempfile.TemporaryDirectory(prefix="qver-") as tmp:
        verdict = solve_file(write_smtlib(vc, Path(tmp), **kw), config)
        verdict.path = None
        return verdict


# -- benchmarking -----------------------------------------------------------


def _bench_one(name: str, vc: VerificationCondition, config: SolverConfig,
               repetitions: int) -> BenchRecord:
    rec = BenchRecord(name, vc.n_vars, vc.n_assertions, vc.logic, Status.EMITTED_ONLY, None,
                      repetitions)
    if vc.is_trig and not config.dispatch_trig:
        if config.workdir is not None:
            write_smtlib(vc, config.workdir, get_model=config.get_model,
                         trig_axioms=config.trig_axioms)
        rec.repetitions = 0
        return rec
    for _ in range(repetitions):
        v = run_solver(vc, config)
        rec.verdict = v.status
        if v.seconds is not None:
            rec.times.append(v.seconds)
        if v.status in (Status.TIMEOUT, Status.ERROR):
            break
    rec.repetitions = len(rec.times)
    rec.seconds = float(np.mean(rec.times)) if rec.times else None
    return rec


def run_bench(suite: Sequence[tuple[str, VerificationCondition]],
              config: SolverConfig | None = None, repetitions: int = 5,
              jobs: int = 1, out_dir: Path | None = None) -> list[BenchRecord]:
    """Solve every row ``repetitions`` times and average the wall-clock.

    A failing row is recorded and the suite goes on.  With ``out_dir`` the
    tables are written as ``results.csv`` and ``results.md``.
    """
    config = config or SolverConfig.from_env()
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if any(not vc.is_trig or config.dispatch_trig for _, vc in suite):
        config.resolve()
    if out_dir is not None and config.workdir is None:
        config = replace(config, workdir=Path(out_dir) / "smt2")

    def one(row):
        name, vc = row
        try:
            return _bench_one(name, vc, config, repetitions)
        except (OSError, RenderError):
            return BenchRecord(name, vc.n_vars, vc.n_assertions, vc.logic, Status.ERROR, None, 0)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        records = list(pool.map(one, suite))
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "results.csv").write_text(results_csv(records), encoding="utf-8")
        (out_dir / "results.md").write_text(results_markdown(records), encoding="utf-8")
    return records


def _fmt_secs(rec: BenchRecord) -> str:
    if rec.seconds is None or rec.verdict is Status.EMITTED_ONLY:
        return ""
    return f"{rec.seconds:.3f}"


CSV_HEADER = ("example", "vars", "assertions", "logic", "result", "wct_s")


def results_csv(records: Sequence[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.example, r.n_vars, r.n_assertions, r.logic, r.verdict.value, _fmt_secs(r)])
    return buf.getvalue()


def results_markdown(records: Sequence[BenchRecord]) -> str:
    lines = ["| Example | Vars | Ass. | Logic | Res. | wct[s] |",
             "|---|---:|---:|---|---|---:|"]
    for r in records:
        lines.append(f"| {r.example} | {r.n_vars} | {r.n_assertions} | {r.logic} | "
                     f"{TABLE_MARKS[r.verdict]} | {_fmt_secs(r)} |")
    return "\n".join(lines) + "\n"


def solver_version(config: SolverConfig) -> str:
    """Best-effort version string, recorded in bench metadata."""
    try:
        exe = config.resolve()
        proc = subprocess.run([exe, "--version"], capture_output=True, text=True, timeout=10)
        return (proc.stdout or proc.stderr).strip().splitlines()[0]
    except (SolverConfigError, OSError, subprocess.SubprocessError, IndexError):
        return "unknown"

"""Acceptance checks, one test per criterion.

Each check prints a single ``[PASS]``/``[FAIL] criterion N: ...`` line; the
lines are also repeated in the pytest terminal summary.  Run the module
directly (``python tests/test_acceptance.py``) to get just the lines.

The table bench uses ``QVER_ACCEPT_TIMEOUT`` seconds per solver call
(default 60) so that the full fabric row finishes as a timeout in a
reasonable time.
"""

from __future__ import annotations

import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _support import random_circuit, trajectory_env  # noqa: E402
from conftest import needs_solver  # noqa: E402
from qver.circuit import CZ, H4, Circuit, Gate, X, Z, build_fabric  # noqa: E402
from qver.cli import main as cli_main  # noqa: E402
from qver.encode import (  # noqa: E402
    Always,
    ExactVar,
    HammingWeightPreserved,
    RationalApprox,
    Subspace,
    encode_condition,
    surface,
)
from qver.formula import Const, Var, add, conj, eq, holds, mul, normalize, residual  # noqa: E402
from qver.oracle import StateVector, run  # noqa: E402
from qver.smt import SolverConfig, Status, check_model, run_bench, run_solver  # noqa: E402
from qver.suites import bell_triple, h4_triple, table1_suite  # noqa: E402
from qver.vcgen import (  # noqa: E402
    AbstractParams,
    HoareTriple,
    encode_circuit,
    locality_reduce,
    make_fabric_prefix_vc,
    make_monolithic,
    make_wp_chain,
    weakest_precondition,
)

RESULTS: list[str] = []
ACCEPT_TIMEOUT = float(os.environ.get("QVER_ACCEPT_TIMEOUT", "60"))


def report(n: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    print(line)
    RESULTS.append(line)
    return ok


def _cfg(**kw) -> SolverConfig:
    kw.setdefault("timeout", ACCEPT_TIMEOUT)
    return SolverConfig.from_env(**kw)


# -- 1: table verdicts ------------------------------------------------------

QUICK_ROWS = ("H+CNOT", "H+CNOT, C1", "H+CNOT, C2", "H+CNOT, P+A1", "H(4)")
PREFIX_ROWS = ("H(2^6), 1/10", "H(2^6), 5/10", "H(2^6), 7/10", "H(2^6), 8/10", "H(2^6), 9/10")
DNS_ROWS = ("H(2^6), naive", "H(2^6), precise")


def check_table_verdicts(repetitions: int = 3) -> bool:
    recs = {r.example: r for r in run_bench(table1_suite(), _cfg(), repetitions=repetitions)}
    problems = []
    for name in QUICK_ROWS:
        r = recs[name]
        if r.verdict is not Status.HOLDS or not r.seconds < 1.0:
            problems.append(f"{name}={r.verdict.value}/{r.seconds}")
    times = []
    for name in PREFIX_ROWS:
        r = recs[name]
        if r.verdict is not Status.HOLDS:
            problems.append(f"{name}={r.verdict.value}")
        times.append(r.seconds or float("inf"))
    if any(b < a for a, b in zip(times, times[1:])):
        problems.append(f"prefix times not monotone {times}")
    if not times[0] < 1.0:
        problems.append(f"k=1 took {times[0]:.3f} s")
    full = recs["H(2^6)"]
    if full.verdict not in (Status.HOLDS, Status.TIMEOUT):
        problems.append(f"full fabric {full.verdict.value}")
    for name in DNS_ROWS:
        if recs[name].verdict is not Status.EMITTED_ONLY:
            problems.append(f"{name}={recs[name].verdict.value}")
    detail = (f"{len(recs)} rows; prefix wct k=1,5,7,8,9 = "
              + ", ".join(f"{t:.3f}" for t in times)
              + f" s; full k=10 {full.verdict.value} at {ACCEPT_TIMEOUT:g} s")
    if problems:
        detail += "; problems: " + "; ".join(problems)
    return report(1, not problems, detail)


# -- 2: counts --------------------------------------------------------------

REFERENCE_COUNTS = {
    "H+CNOT": (25, 26),
    "H+CNOT, P+A1": (9, 3),
    "H(2^6), 1/10": (260, 71),
    "H(4)": (20, 15),
}


def _within(ours: int, ref: int, tol: float = 0.25) -> bool:
    return abs(ours - ref) <= tol * ref


def check_counts() -> bool:
    suite = dict(table1_suite())
    parts, ok = [], True
    for name, (rv, ra) in REFERENCE_COUNTS.items():
        vc = suite[name]
        good = _within(vc.n_vars, rv) and _within(vc.n_assertions, ra)
        ok &= good
        parts.append(f"{name} {vc.n_vars}/{vc.n_assertions} vs {rv}/{ra}"
                     f"{'' if good else ' (out of range)'}")
    fabric = build_fabric(6, 4, ["lambda"] * 10)
    ks = np.arange(1, 11)
    worst = 0.0
    for col in (0, 1):
        ys = np.array([(lambda vc: (vc.n_vars, vc.n_assertions)[col])(
            make_fabric_prefix_vc(fabric, int(k))) for k in ks], dtype=float)
        coef = np.polyfit(ks, ys, 1)
        worst = max(worst, float(np.max(np.abs(np.polyval(coef, ks) - ys) / ys)))
    affine = worst < 0.05
    ok &= affine
    parts.append(f"fabric counts affine in k, max relative residual {worst:.2e}")
    return report(2, ok, "; ".join(parts))


# -- 3: weakest preconditions ----------------------------------------------


def _amp(bits, step, part):
    return Var(f"c_{bits}_{step}_{part}")


def check_wp(config: SolverConfig | None = None) -> bool:
    bell = bell_triple()
    q = encode_condition(bell.post, surface(2, 2), 2)
    a2 = weakest_precondition(bell.circuit, q, 1, 2)
    a2_ref = conj(*(eq(_amp(b, 1, p), 0) for b in ("01", "11") for p in ("re", "im")))
    a1 = weakest_precondition(bell.circuit, q, 0, 2)
    a1_ref = conj(*(eq(g, 0) for p in ("re", "im")
                    for g in (add(_amp("01", 0, p), _amp("11", 0, p)),
                              add(_amp("01", 0, p), mul(Const(-1), _amp("11", 0, p))))))
    a2_ok = normalize(a2) == normalize(a2_ref)
    a1_ok = normalize(a1) == normalize(a1_ref)
    t0 = time.perf_counter()
    v = run_solver(make_wp_chain(bell)[0], config or _cfg())
    secs = time.perf_counter() - t0
    ok = a2_ok and a1_ok and v.status is Status.HOLDS and secs < 1.0
    return report(3, ok, f"A2 exact {a2_ok}, A1 up to r {a1_ok}, "
                         f"P+A1 {v.status.value} in {secs:.3f} s")


# -- 4: oracle against step constraints -------------------------------------


def check_oracle_agreement(n_circuits: int = 200, seed: int = 4) -> bool:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = {"rational": 0.0, "exact": 0.0}
    bad = 0
    for _ in range(n_circuits):
        n = int(rng.integers(1, 5))
        c = random_circuit(n, int(rng.integers(0, 9)), rng)
        psi = StateVector.random(n, rng)
        env = trajectory_env(c, psi)
        env["r"] = math.sqrt(0.5)
        for label, mode, tol in (("rational", RationalApprox(), 1e-6),
                                 ("exact", ExactVar(), 1e-9)):
            enc = encode_circuit(c, dialect="NRA", sqrt_mode=mode)
            for e in enc.equalities():
                worst[label] = max(worst[label], abs(residual(e, env)))
            if not all(holds(e, env, tol) for e in enc.equalities() + enc.side):
                bad += 1
    secs = time.perf_counter() - t0
    ok = bad == 0 and secs < 30
    return report(4, ok, f"{n_circuits} circuits, max residual "
                         f"{worst['rational']:.1e} (rational) / {worst['exact']:.1e} (exact), "
                         f"{bad} violations, {secs:.1f} s")


# -- 5: locality reduction ----------------------------------------------------


def random_hw_fabric(rng) -> Circuit:
    n = int(rng.integers(2, 5))
    gates = []
    for _ in range(int(rng.integers(1, 7))):
        kind = int(rng.integers(5))
        q = int(rng.integers(n - 1))
        if kind == 0:
            gates.append((H4(float(rng.uniform(0, 2 * math.pi))), (q, q + 1)))
        elif kind == 1:
            gates.append((H4("mu"), (q, q + 1)))
        elif kind == 2:
            gates.append((Z(), (int(rng.integers(n)),)))
        elif kind == 3:
            gates.append((CZ(), (q, q + 1)))
        else:
            gates.append((Gate("rz", float(rng.uniform(-math.pi, math.pi))),
                          (int(rng.integers(n)),)))
    return Circuit.from_gates(n, gates)


def check_locality(n_circuits: int = 50, seed: int = 5) -> bool:
    rng = np.random.default_rng(seed)
    cfg = _cfg()
    t0 = time.perf_counter()
    agree = 0
    for _ in range(n_circuits):
        triple = HoareTriple(Always(), random_hw_fabric(rng), HammingWeightPreserved())
        mono = run_solver(make_monolithic(triple), cfg).status is Status.HOLDS
        red = locality_reduce(triple)
        local = all(run_solver(vc, cfg).status is Status.HOLDS for vc in red.vcs)
        agree += mono == local
    x_circ = Circuit.from_gates(3, [(H4(0.7), (0, 1)), (X(), (2,)), (CZ(), (1, 2))])
    red = locality_reduce(HoareTriple(Always(), x_circ, HammingWeightPreserved()))
    statuses = [run_solver(vc, cfg).status for vc in red.vcs]
    x_failed = Status.REFUTED in statuses
    secs = time.perf_counter() - t0
    ok = agree == n_circuits and x_failed and secs < 300
    return report(5, ok, f"{agree}/{n_circuits} fabrics agree (local all-Hold <=> monolithic Holds); "
                         f"X circuit {'FAILED' if x_failed else 'not refuted'}; {secs:.1f} s")


# -- 6: relaxation ------------------------------------------------------------


def check_relaxation(tmp: Path, samples: int = 1000, seed: int = 6) -> bool:
    rng = np.random.default_rng(seed)
    params = AbstractParams.for_param("lambda")
    bounds = params.constraints()[:4]
    circle = params.constraints()[4]
    spurious, violations, off_circle, worst_norm = 0, 0, 0, 0.0
    for lam in rng.uniform(0, 2 * math.pi, samples):
        c, s = math.cos(lam / 2), math.sin(lam / 2)
        env = {"c_lambda": c, "s_lambda": s}
        inside = all(holds(b, env, 0.0) for b in bounds)
        if not inside:
            violations += 1
            if c >= 0 and s >= 0:
                spurious += 1
        worst_norm = max(worst_norm, abs(s * s + c * c - 1))
        off_circle += not holds(circle, env, 1e-12)
    nra = run_solver(make_monolithic(h4_triple(), "NRA"), _cfg()).status
    trig = run_solver(make_monolithic(h4_triple(), "TRIG"),
                      _cfg(command=("no-such-solver",), workdir=tmp))
    text = trig.path.read_text() if trig.path else ""
    well_formed = (text.count("(") == text.count(")") and "(check-sat)" in text
                   and "(sin " in text and "set-logic" not in text)
    ok = (spurious == 0 and off_circle == 0 and worst_norm <= 1e-12 and nra is Status.HOLDS
          and trig.status is Status.EMITTED_ONLY and well_formed)
    return report(6, ok, f"{violations}/{samples} samples leave the box, all with cos(lambda/2) < 0 "
                         f"or sin < 0 ({spurious} otherwise); max |s^2+c^2-1| {worst_norm:.1e}; "
                         f"NRA H(4) {nra.value}; TRIG {trig.status.value}, "
                         f"well-formed {well_formed}")


# -- 7: witness ---------------------------------------------------------------


def check_witness() -> bool:
    bell = bell_triple()
    triple = HoareTriple(bell.pre, bell.circuit, Subspace({"00"}))
    vc = make_monolithic(triple, "LRA")
    t0 = time.perf_counter()
    v = run_solver(vc, _cfg())
    secs = time.perf_counter() - t0
    if v.status is not Status.REFUTED:
        return report(7, False, f"expected Refuted, got {v.status.value}")
    model_ok = check_model(vc, v.model, 1e-6)
    mag = math.hypot(float(v.model.get("c_11_2_re", 0)), float(v.model.get("c_11_2_im", 0)))
    oracle = abs(run(bell.circuit, StateVector.basis("00")).amps[3])
    close = abs(mag - oracle) < 1e-6
    ok = model_ok and mag > 0 and close and secs < 1.0
    return report(7, ok, f"Refuted in {secs:.3f} s; model satisfies assertions {model_ok}; "
                         f"|c_11| = {mag:.9f} vs oracle {oracle:.9f}")


# -- 8: determinism -----------------------------------------------------------


def _cli_round(out: Path) -> None:
    cli_main(["--out-dir", str(out), "generate", "bell"])
    cli_main(["--out-dir", str(out), "generate", "kicked-ising", "--L", "3", "--seed", "9",
              "--out", str(out / "ki.json")])
    cli_main(["--out-dir", str(out), "generate", "fabric", "--shared-lambda"])
    cli_main(["--out-dir", str(out / "v1"), "verify", str(out / "bell.json"), "--pre",
              "input-basis 00", "--post", "subspace {00,11}", "--strategy", "wp", "--audit",
              "--solver", "no-such-solver"])
    cli_main(["--out-dir", str(out / "v2"), "verify", str(out / "fabric.json"), "--post",
              "hw-preserved", "--dialect", "TRIG", "--solver", "no-such-solver"])
    cli_main(["--out-dir", str(out / "b"), "bench", "--only", "H+CNOT", "--only", "H(4)",
              "--only", "H(2^6), 1/10", "--only", "H(2^6), naive", "--repetitions", "1",
              "--timeout", str(ACCEPT_TIMEOUT)])


def check_determinism(tmp: Path) -> bool:
    a, b = tmp / "run1", tmp / "run2"
    _cli_round(a)
    _cli_round(b)
    files_a = sorted(p.relative_to(a) for p in a.rglob("*.smt2"))
    files_b = sorted(p.relative_to(b) for p in b.rglob("*.smt2"))
    same_smt = files_a == files_b and all((a / p).read_bytes() == (b / p).read_bytes()
                                          for p in files_a)
    same_json = all((a / p).read_bytes() == (b / p).read_bytes()
                    for p in ("bell.json", "ki.json", "fabric.json"))

    def counts(root):
        lines = (root / "b" / "results.csv").read_text().splitlines()
        return [ln.split(",")[:4] for ln in lines]

    same_csv = counts(a) == counts(b)
    ok = bool(files_a) and same_smt and same_json and same_csv
    return report(8, ok, f"{len(files_a)} .smt2 files byte-identical {same_smt}; "
                         f"circuit files identical {same_json}; CSV count columns identical {same_csv}")


# -- pytest entry points ------------------------------------------------------


@needs_solver
@pytest.mark.slow
def test_criterion_1_table_verdicts():
    assert check_table_verdicts()


def test_criterion_2_count_proximity():
    assert check_counts()


@needs_solver
def test_criterion_3_weakest_preconditions():
    assert check_wp()


def test_criterion_4_oracle_encoder_agreement():
    assert check_oracle_agreement()


@needs_solver
def test_criterion_5_locality_reduction():
    assert check_locality()


@needs_solver
def test_criterion_6_relaxation(tmp_path):
    assert check_relaxation(tmp_path)


@needs_solver
def test_criterion_7_refutation_witness():
    assert check_witness()


@needs_solver
def test_criterion_8_determinism(tmp_path):
    assert check_determinism(tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        results = [check_table_verdicts(), check_counts(), check_wp(), check_oracle_agreement(),
                   check_locality(), check_relaxation(Path(d) / "c6"),
                   check_witness(), check_determinism(Path(d) / "c8")]
    sys.exit(0 if all(results) else 1)

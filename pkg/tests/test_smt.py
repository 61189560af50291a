import csv
import io
import stat
import time
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import needs_solver
from qver.formula import Trig, Var, eq, le, mul
from qver.smt import (
    CSV_HEADER,
    RenderError,
    SolverConfig,
    SolverConfigError,
    Status,
    check_model,
    parse_model,
    render_smtlib,
    results_csv,
    results_markdown,
    run_bench,
    run_solver,
    safe_filename,
    write_smtlib,
)
from qver.suites import bell_triple, h4_triple
from qver.vcgen import VerificationCondition, make_monolithic, make_vc, make_wp_chain

x, y = Var("x"), Var("y")


def fake_solver(tmp_path: Path, body: str) -> str:
    script = tmp_path / "fake-solver.sh"
    script.write_text("#!/bin/sh\n" + body + "\n")
    script.chmod(script.stat().st_mode | stat.S_IEXEC)
    return str(script)


def test_render_is_deterministic():
    a = render_smtlib(make_monolithic(bell_triple()))
    b = render_smtlib(make_monolithic(bell_triple()))
    assert a == b
    assert a.startswith("; monolithic\n")
    assert "(set-logic QF_NRA)" in a or "(set-logic QF_LRA)" in a
    assert a.rstrip().endswith("(get-model)")
    assert "\r" not in a


def test_declarations_sorted_and_complete():
    vc = make_monolithic(bell_triple(), "LRA")
    text = render_smtlib(vc)
    decls = [ln.split()[1] for ln in text.splitlines() if ln.startswith("(declare-const")]
    assert decls == sorted(decls) and len(decls) == vc.n_vars


def test_zero_assertion_antecedent():
    vc = make_vc("trivial", [], eq(x, x))
    text = render_smtlib(vc, get_model=False)
    assert text.count("(assert") == 1
    assert text.rstrip().endswith("(check-sat)")


def test_trig_outside_trig_logic_rejected():
    vc = VerificationCondition("bad", "QF_NRA", ("x",), (eq(Trig("sin", x), 0),), eq(x, 0))
    with pytest.raises(RenderError):
        render_smtlib(vc)


def test_trig_rendering_without_logic():
    vc = make_monolithic(h4_triple(), "TRIG")
    text = render_smtlib(vc)
    assert "set-logic" not in text and "(sin " in text
    ax = render_smtlib(vc, trig_axioms=True)
    assert "(declare-fun sin (Real) Real)" in ax


def test_safe_filename():
    assert safe_filename("H(2^6), 9/10") == "H_2_6_9_10"
    assert safe_filename("///") == "vc"


def test_write_uses_lf(tmp_path):
    p = write_smtlib(make_vc("a b", [le(x, 1)], le(x, 2)), tmp_path)
    assert p.name == "a_b.smt2"
    assert b"\r\n" not in p.read_bytes()


def test_parse_model_define_fun():
    text = """(
  (define-fun x () Real (/ 1.0 2.0))
  (define-fun y () Real (- 3.0))
)"""
    assert parse_model(text) == {"x": Fraction(1, 2), "y": Fraction(-3)}


def test_parse_model_pairs_and_root_obj():
    text = "((x 0.25) (y (root-obj (+ (* 2 (^ x 2)) (- 1)) 2)))"
    m = parse_model(text)
    assert m["x"] == Fraction(1, 4)
    assert abs(float(m["y"]) - 2 ** -0.5) < 1e-12


def test_parse_model_model_keyword():
    assert parse_model("(model (define-fun x () Real 1.0))") == {"x": Fraction(1)}


def test_check_model():
    vc = make_vc("m", [le(x, 1)], eq(mul(x, y), 0))
    assert check_model(vc, {"x": Fraction(1), "y": Fraction(2)})
    assert not check_model(vc, {"x": Fraction(0), "y": Fraction(2)})


def test_argv_substitution(tmp_path):
    cfg = SolverConfig(command=("z3", "-T:{timeout}", "{file}"), timeout=2.5)
    assert cfg.argv(tmp_path / "a.smt2") == ["z3", "-T:3", str(tmp_path / "a.smt2")]
    cfg = SolverConfig(command="cvc5 --tlimit={timeout_ms}", timeout=2)
    assert cfg.argv(Path("f")) == ["cvc5", "--tlimit=2000", "f"]


def test_bad_config():
    with pytest.raises(SolverConfigError):
        SolverConfig(timeout=0)
    with pytest.raises(SolverConfigError):
        SolverConfig(command=())


def test_missing_solver(tmp_path):
    cfg = SolverConfig(command=("definitely-not-a-solver-xyz",), workdir=tmp_path)
    with pytest.raises(SolverConfigError):
        run_solver(make_wp_chain(bell_triple())[0], cfg)


def test_env_override(monkeypatch):
    monkeypatch.setenv("QVER_SOLVER", "mysolver --flag")
    assert SolverConfig.from_env().command == ("mysolver", "--flag")


def test_fake_solver_sat_with_model(tmp_path):
    exe = fake_solver(tmp_path, "echo sat; echo '((define-fun x () Real 2.0))'")
    v = run_solver(make_vc("f", [le(x, 3)], le(x, 1)), SolverConfig(command=(exe,)))
    assert v.status is Status.REFUTED and v.model == {"x": Fraction(2)}


def test_fake_solver_garbage_is_error(tmp_path):
    exe = fake_solver(tmp_path, "echo 'segfault'")
    v = run_solver(make_vc("f", [], le(x, 1)), SolverConfig(command=(exe,)))
    assert v.status is Status.ERROR


def test_hung_solver_is_killed(tmp_path):
    exe = fake_solver(tmp_path, "exec sleep 30")
    t0 = time.perf_counter()
    v = run_solver(make_vc("f", [], le(x, 1)), SolverConfig(command=(exe,), timeout=1))
    assert v.status is Status.TIMEOUT
    assert time.perf_counter() - t0 < 1 + 2


def test_trig_emitted_only(tmp_path):
    vc = make_monolithic(h4_triple(), "TRIG")
    v = run_solver(vc, SolverConfig(command=("no-such-solver",), workdir=tmp_path))
    assert v.status is Status.EMITTED_ONLY and v.path.exists()


def test_bench_empty_suite(tmp_path):
    recs = run_bench([], SolverConfig(command=("no-such-solver",)), out_dir=tmp_path)
    assert recs == []
    assert (tmp_path / "results.csv").read_text().splitlines() == [",".join(CSV_HEADER)]


def test_bench_trig_row_blank_time(tmp_path):
    vc = make_monolithic(h4_triple(), "TRIG")
    recs = run_bench([("t", vc)], SolverConfig(command=("no-such-solver",)), out_dir=tmp_path)
    rows = list(csv.DictReader(io.StringIO(results_csv(recs))))
    assert rows[0]["result"] == "EmittedOnly" and rows[0]["wct_s"] == ""
    assert "DNS-equivalent" in results_markdown(recs)
    assert (tmp_path / "smt2" / "monolithic.smt2").exists()


def test_bench_rejects_zero_reps():
    with pytest.raises(ValueError):
        run_bench([], repetitions=0)


def test_bench_averages_repetitions(tmp_path):
    exe = fake_solver(tmp_path, "echo unsat")
    recs = run_bench([("a", make_vc("a", [], le(x, 1)))], SolverConfig(command=(exe,)),
                     repetitions=3)
    assert recs[0].verdict is Status.HOLDS and recs[0].repetitions == 3


@needs_solver
def test_real_solver_roundtrip(tmp_path):
    v = run_solver(make_vc("r", [le(x, 1)], le(x, 2)), SolverConfig(timeout=30))
    assert v.status is Status.HOLDS
    v = run_solver(make_vc("r", [le(x, 3)], le(x, 2)), SolverConfig(timeout=30))
    assert v.status is Status.REFUTED and v.model["x"] > 2


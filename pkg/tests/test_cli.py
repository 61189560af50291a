import json

import pytest

from conftest import needs_solver
from qver.cli import EXIT_OK, EXIT_REFUTED, EXIT_UNDECIDED, EXIT_USAGE, UsageError, main, parse_property
from qver.circuit import load_circuit
from qver.encode import Always, BasisInput, HammingWeightPreserved, Subspace


def run(tmp_path, *argv):
    return main(["--out-dir", str(tmp_path), *argv])


def test_parse_property():
    assert parse_property("true") == Always()
    assert parse_property("hw-preserved") == HammingWeightPreserved()
    assert parse_property("input-basis 01") == BasisInput("01")
    assert parse_property("subspace {00, 11}") == Subspace({"00", "11"})
    assert parse_property("subspace 00,11") == Subspace({"00", "11"})
    assert parse_property("subspace-normalized 1").normalized
    for bad in ("", "input-basis 2", "subspace {0a}", "nonsense"):
        with pytest.raises(UsageError):
            parse_property(bad)


def test_generate_bell(tmp_path, capsys):
    assert run(tmp_path, "generate", "bell") == EXIT_OK
    c = load_circuit(tmp_path / "bell.json")
    assert c.n_qubits == 2 and len(c.ops) == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "generate"


def test_generate_fabric_modes(tmp_path):
    assert run(tmp_path, "generate", "fabric", "--qubits", "6", "--mode", "abstract") == EXIT_OK
    assert len(load_circuit(tmp_path / "fabric.json").ops) == 10
    out = tmp_path / "d.json"
    assert run(tmp_path, "generate", "fabric", "--mode", "decomposed", "--out", str(out)) == 0
    assert len(load_circuit(out).ops) == 80
    assert run(tmp_path, "generate", "fabric", "--shared-lambda", "--out", str(out)) == 0
    assert load_circuit(out).symbols() == ["lambda"]


def test_generate_kicked_ising_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(tmp_path, "generate", "kicked-ising", "--L", "3", "--seed", "5", "--out", str(a)) == 0
    assert run(tmp_path, "generate", "kicked-ising", "--L", "3", "--seed", "5", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run(tmp_path, "generate", "kicked-ising") == EXIT_USAGE


def test_generate_bad_fabric(tmp_path):
    assert run(tmp_path, "generate", "fabric", "--qubits", "5") == EXIT_USAGE


def test_unknown_subcommand_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "prove")
    assert exc.value.code == EXIT_USAGE


def test_verify_needs_post(tmp_path):
    run(tmp_path, "generate", "bell")
    assert run(tmp_path, "verify", str(tmp_path / "bell.json")) == EXIT_USAGE


def test_verify_width_mismatch(tmp_path):
    run(tmp_path, "generate", "bell")
    assert run(tmp_path, "verify", str(tmp_path / "bell.json"), "--pre", "input-basis 000",
               "--post", "subspace {00,11}") == EXIT_USAGE


def test_verify_missing_file(tmp_path):
    assert run(tmp_path, "verify", str(tmp_path / "none.json"), "--post", "true") == EXIT_USAGE


def test_verify_missing_solver(tmp_path):
    run(tmp_path, "generate", "bell")
    assert run(tmp_path, "verify", str(tmp_path / "bell.json"), "--pre", "input-basis 00",
               "--post", "subspace {00,11}", "--solver", "no-such-solver-xyz") == EXIT_USAGE


def test_verify_bad_timeout(tmp_path):
    run(tmp_path, "generate", "bell")
    assert run(tmp_path, "verify", str(tmp_path / "bell.json"), "--post", "true",
               "--timeout", "0") == EXIT_USAGE


def test_post_raw_needs_monolithic(tmp_path):
    run(tmp_path, "generate", "bell")
    assert run(tmp_path, "verify", str(tmp_path / "bell.json"), "--strategy", "wp",
               "--post-raw", "(= c_00_2_re 0.0)") == EXIT_USAGE


def test_trig_not_dispatched_is_undecided(tmp_path):
    run(tmp_path, "generate", "fabric", "--qubits", "2", "--layers", "1", "--shared-lambda")
    code = run(tmp_path, "verify", str(tmp_path / "fabric.json"), "--post", "hw-preserved",
               "--dialect", "TRIG", "--solver", "no-such-solver-xyz")
    assert code == EXIT_UNDECIDED
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["obligations"][0]["status"] == "EmittedOnly"


def test_simulate(tmp_path, capsys):
    run(tmp_path, "generate", "bell")
    capsys.readouterr()
    assert run(tmp_path, "simulate", str(tmp_path / "bell.json")) == EXIT_OK
    out = capsys.readouterr().out
    assert "00  +0.707106781187" in out and "HW(out) = 1.000000000000" in out


def test_simulate_unbound(tmp_path):
    run(tmp_path, "generate", "fabric", "--qubits", "2", "--layers", "1")
    f = str(tmp_path / "fabric.json")
    assert run(tmp_path, "simulate", f) == EXIT_USAGE
    assert run(tmp_path, "simulate", f, "--lambda", "0.4", "--input", "01") == EXIT_OK
    assert run(tmp_path, "simulate", f, "--lambda", "x") == EXIT_USAGE
    assert run(tmp_path, "simulate", f, "--lambda", "0.4", "--input", "0") == EXIT_USAGE


def test_bench_unknown_row(tmp_path):
    assert run(tmp_path, "bench", "--only", "nope", "--solver", "no-such-solver") == EXIT_USAGE


@needs_solver
def test_verify_bell_wp_holds(tmp_path):
    run(tmp_path, "generate", "bell")
    code = run(tmp_path, "verify", str(tmp_path / "bell.json"), "--pre", "input-basis 00",
               "--post", "subspace {00,11}", "--strategy", "wp", "--timeout", "60")
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["verdicts"] == {"P+A1": "Holds"}
    assert manifest["solver"]["timeout"] == 60


@needs_solver
def test_verify_bell_refuted_prints_witness(tmp_path, capsys):
    run(tmp_path, "generate", "bell")
    code = run(tmp_path, "verify", str(tmp_path / "bell.json"), "--pre", "input-basis 00",
               "--post", "subspace {00}", "--timeout", "60")
    assert code == EXIT_REFUTED
    assert "c_11_2_re = 0.70710678" in capsys.readouterr().out


@needs_solver
def test_verify_locality_fabric(tmp_path, capsys):
    run(tmp_path, "generate", "fabric", "--shared-lambda")
    code = run(tmp_path, "verify", str(tmp_path / "fabric.json"), "--post", "hw-preserved",
               "--strategy", "locality", "--timeout", "60")
    assert code == EXIT_OK
    assert "locality reduction: HOLDS" in capsys.readouterr().out


@needs_solver
def test_bench_only_rows(tmp_path):
    code = run(tmp_path, "bench", "--only", "H+CNOT", "--only", "H(4)", "--repetitions", "1",
               "--timeout", "60")
    assert code == EXIT_OK
    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert lines[0] == "example,vars,assertions,logic,result,wct_s"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["H+CNOT", "H(4)"]

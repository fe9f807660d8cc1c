import json
import subprocess
import sys

import numpy as np
import pytest

from tnqsim import cli
from tnqsim.circuit import Circuit
from tnqsim.pauli import WeightedPauliSum, sum_to_dense, tfim_hamiltonian


@pytest.fixture
def files(tmp_path):
    c = Circuit(3)
    c.h(0)
    c.cnot(0, 1)
    c.ry(2, theta=0.7)
    circ = tmp_path / "circuit.json"
    circ.write_text(json.dumps(c.to_ir()))
    ham = tmp_path / "ham.json"
    ham.write_text(json.dumps(tfim_hamiltonian(3, [1.0, 0.5], [0.3, -0.2, 0.8]).to_json()))
    return c, circ, ham, tmp_path


def run_main(argv, capsys):
    code = cli.main([str(a) for a in argv])
    return code, json.loads(capsys.readouterr().out)


def test_run_probabilities_and_counts(files, capsys):
    c, circ, _, _ = files
    code, rep = run_main(["run", circ, "--shots", 2000, "--seed", 3], capsys)
    assert code == 0
    probs = np.abs(c.wavefunction()) ** 2
    for key, p in rep["probabilities"].items():
        assert abs(p - probs[int(key, 2)]) < 1e-12
    assert sum(rep["counts"].values()) == 2000
    assert set(rep["counts"]) <= set(rep["probabilities"])
    assert abs(rep["counts"].get("110", 0) / 2000 - probs[0b110]) < 0.05


@pytest.mark.parametrize("rep", ["dense", "sparse", "mpo", "loop"])
def test_expect_representations(files, capsys, rep):
    c, circ, ham, _ = files
    code, out = run_main(["expect", circ, ham, "--repr", rep], capsys)
    assert code == 0 and "seconds" not in out
    psi = c.wavefunction()
    h = WeightedPauliSum.from_json(json.loads(ham.read_text()))
    assert abs(out["value"] - np.vdot(psi, sum_to_dense(h) @ psi).real) < 1e-10


def test_timings_flag(files, capsys):
    _, circ, ham, _ = files
    _, out = run_main(["--timings", "expect", circ, ham], capsys)
    assert "seconds" in out


def test_schema_error_exit_code(files, capsys):
    _, circ, _, tmp = files
    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"version": "1", "n": 2, "ops": [{"kind": "gate", "name": "h", "qubits": [7]}]}))
    code, out = run_main(["run", bad], capsys)
    assert code == 2 and out["error"] == "schema"
    broken = tmp / "broken.json"
    broken.write_text("{not json")
    assert run_main(["run", broken], capsys)[0] == 2
    wrong = tmp / "wrong.json"
    wrong.write_text(json.dumps(tfim_hamiltonian(2, 1.0, 1.0).to_json()))
    assert run_main(["expect", circ, wrong], capsys)[0] == 2


def test_missing_file_is_error(tmp_path, capsys):
    code, out = run_main(["run", tmp_path / "nope.json"], capsys)
    assert code == 1 and "error" in out


def test_bench_timeout_exit_code(capsys):
    code, out = run_main(["bench", "--n", 20, "--depth", 4, "--max-time", 1e-9], capsys)
    assert code == 3 and out["timed_out"]


def test_vqe_bp_bench_small(capsys):
    code, rep = run_main(["vqe", "--n", 3, "--layers", 1, "--steps", 3, "--restarts", 2], capsys)
    assert code == 0 and len(rep["energies"]) == 4
    code, rep = run_main(["bp", "--qubits", 3, "--layers", 2, "--circuits", 4], capsys)
    assert code == 0 and rep["n_circuits"] == 4
    code, rep = run_main(["bench", "--n", 4, "--depth", 1], capsys)
    assert code == 0 and len(rep["value"]) == 2


def test_out_flag_either_position(files, tmp_path, capsys):
    _, circ, _, _ = files
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["--out", str(a), "run", str(circ)]) == 0
    assert cli.main(["run", str(circ), "--out", str(b)]) == 0
    assert capsys.readouterr().out == ""
    assert a.read_bytes() == b.read_bytes()


def test_byte_identical_reports(files):
    _, circ, ham, _ = files
    commands = [
        ["run", str(circ), "--shots", "100", "--seed", "5"],
        ["expect", str(circ), str(ham), "--repr", "mpo"],
        ["vqe", "--n", "3", "--layers", "1", "--steps", "4", "--restarts", "2", "--seed", "2"],
        ["bp", "--qubits", "3", "--layers", "2", "--circuits", "3", "--seed", "1"],
        ["bench", "--n", "6", "--depth", "2", "--seed", "4"],
    ]
    for cmd in commands:
        outs = [subprocess.run([sys.executable, "-m", "tnqsim.cli", *cmd], capture_output=True,
                               check=True).stdout for _ in range(2)]
        assert outs[0] == outs[1], cmd


def test_draw(files, capsys):
    c, circ, _, _ = files
    code, rep = run_main(["draw", circ], capsys)
    assert code == 0 and rep["diagram"] == c.diagram()
    lines = rep["diagram"].splitlines()
    assert len(lines) == 3 and lines[0].startswith("q0: ") and "cnot" in lines[0] and "*" in lines[1]

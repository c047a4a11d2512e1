import itertools
import json

import numpy as np
import pytest

from dense import matrix
from wormholes.config import ConfigError, parse_config
from wormholes.experiment import (
    BUNDLED,
    ExperimentError,
    bundled_text,
    identify_gate,
    load_bundled,
    render_report,
    run_experiment,
    sidecar,
    verify_all,
)
from wormholes.frame import LogicalAction
from wormholes.pauli import PauliOperator

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
S = np.diag([1, 1j])
CZ = np.diag([1, 1, 1, -1])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])


def dense_action(u, k):
    """Symplectic rows of U P U^dag for P in X1..Xk, Z1..Zk, found by matching dense Paulis."""
    paulis = {}
    for bits in itertools.product((0, 1), repeat=2 * k):
        x = sum(b << q for q, b in enumerate(bits[:k]))
        z = sum(b << q for q, b in enumerate(bits[k:]))
        paulis[bits] = matrix(PauliOperator(k, x, z, 0))
    rows = []
    for q in range(2 * k):
        basis = PauliOperator(k, 1 << q if q < k else 0, 1 << (q - k) if q >= k else 0, 0)
        img = u @ matrix(basis) @ u.conj().T
        hit = [bits for bits, m in paulis.items() if abs(abs(np.trace(m.conj().T @ img)) - 2 ** k) < 1e-9]
        rows.append(hit[0])
    return LogicalAction(tuple(rows), (1,) * (2 * k))


@pytest.mark.parametrize("u,name", [(np.eye(2), "I"), (H, "H"), (S, "S")])
def test_single_qubit_gate_table(u, name):
    assert identify_gate(dense_action(u, 1), ["q"]).name == name


@pytest.mark.parametrize("u,name", [(CZ, "CZ"), (CNOT, "CNOT"), (SWAP, "SWAP")])
def test_two_qubit_gate_table(u, name):
    g = identify_gate(dense_action(u, 2), ["a", "b"])
    assert g.name == name


def test_cnot_lists_control_first_and_wormhole_is_cx():
    # qubit 0 in our tensor order is the most significant factor, i.e. the control
    g = identify_gate(dense_action(CNOT, 2), ["P1+P2", "W1.a"])
    assert (g.name, g.qubits) == ("CX", ("P1+P2", "W1.a"))
    rev = identify_gate(dense_action(SWAP @ CNOT @ SWAP, 2), ["P1+P2", "P3+P4"])
    assert (rev.name, rev.qubits) == ("CNOT", ("P3+P4", "P1+P2"))


def test_unrecognized_gate_is_reported():
    g = identify_gate(dense_action(CNOT @ np.kron(H, np.eye(2)), 2), ["a", "b"])
    assert g.name.startswith("unrecognized:")


# ---- config ----

MINIMAL = "lattice toric L=4\n"


def test_minimal_config_runs_with_two_qubits():
    out = run_experiment(parse_config(MINIMAL))
    assert out.engine.frame.k == 2
    assert out.passed
    assert "script:\n  (empty)" in render_report(out)


def test_normalized_text_round_trips():
    text = "# c\nlattice toric  L=8\nseed 3\npuncture smooth vertices:(1,1)   # x\n\nmove P1 left\n"
    cfg = parse_config(text)
    assert cfg.text() == "lattice toric L=8\nseed 3\npuncture smooth vertices:(1,1)\nmove P1 left\n"
    assert parse_config(cfg.text()).text() == cfg.text()


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_files_round_trip(name):
    cfg = load_bundled(name)
    assert parse_config(cfg.text()).text() == cfg.text()
    assert bundled_text(name).strip()


@pytest.mark.parametrize("text,line,col", [
    ("lattice toric L=4\nmove P1 sideways\n", 2, 9),
    ("lattice toric L=4\nfrobnicate\n", 2, 1),
    ("seed 1\n", 1, 1),
    ("lattice toric L=4\nmeasure P1 X outcome=2\n", 2, 14),
])
def test_config_errors_carry_position(text, line, col):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert (err.value.line, err.value.column) == (line, col)


def test_runtime_error_names_step_and_line():
    text = "lattice toric L=6\npuncture smooth vertices:(2,2)\npuncture smooth vertices:(2,2)\n"
    with pytest.raises(ExperimentError, match=r"step 2 \(line 3\)"):
        run_experiment(parse_config(text))


def test_failed_expectation_fails_the_run():
    out = run_experiment(parse_config(MINIMAL + "expect k 3\n"))
    assert not out.passed
    assert "FAIL" in render_report(out)


def test_sidecar_is_json():
    out = run_experiment(load_bundled("braid_cnot"))
    data = json.loads(sidecar(out))
    assert data["passed"] and data["gates"][0]["gate"] == "CNOT"


def test_verify_all_is_deterministic():
    a, ok = verify_all()
    b, _ = verify_all()
    assert ok and a == b
    assert a.rstrip().endswith(f"verify-all: PASS ({len(BUNDLED)} experiments)")


# ---- cli ----

def test_cli_exit_codes(tmp_path, capsys):
    from wormholes.cli import main
    good = tmp_path / "good.exp"
    good.write_text(MINIMAL + "expect k 2\n")
    assert main(["run", str(good)]) == 0
    bad = tmp_path / "bad.exp"
    bad.write_text(MINIMAL + "expect k 5\n")
    assert main(["run", str(bad)]) == 1
    broken = tmp_path / "broken.exp"
    broken.write_text("lattice hex L=4\n")
    assert main(["run", str(broken)]) == 2
    clash = tmp_path / "clash.exp"
    clash.write_text("lattice toric L=6\npuncture smooth vertices:(2,2)\npuncture smooth vertices:(2,2)\n")
    assert main(["run", str(clash)]) == 3
    assert "line 3" in capsys.readouterr().err


def test_cli_json_and_fmt(tmp_path, capsys):
    from wormholes.cli import main
    src = tmp_path / "x.exp"
    src.write_text("lattice  toric L=4 # hi\n")
    side = tmp_path / "x.json"
    assert main(["run", str(src), "--json", str(side)]) == 0
    assert json.loads(side.read_text())["k"] == 2
    capsys.readouterr()
    assert main(["fmt", str(src)]) == 0
    assert capsys.readouterr().out == "lattice toric L=4\nseed 0\n"

import csv
import io
import json
import socket
import subprocess
import sys

import pytest

from qlink.cli import main


@pytest.fixture
def bell(tmp_path):
    path = tmp_path / "bell.qc"
    path.write_text("H 0\nC[0] (X 1)\n")
    return str(path)


@pytest.fixture
def ham(tmp_path):
    path = tmp_path / "h.ham"
    path.write_text("1.0 * Z 0 Z 1 + 0.5 * X 0\n")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_prints_amplitudes(capsys, bell):
    code, out, _ = run(capsys, "run", "--circuit", bell)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["index", "real", "imag"]
    assert float(rows[1][1]) == pytest.approx(2**-0.5) and float(rows[4][1]) == pytest.approx(2**-0.5)
    assert len(rows) == 5


def test_run_density_and_json(capsys, bell):
    code, out, _ = run(capsys, "run", "--circuit", bell, "--density", "--qubits", "3")
    assert code == 0
    assert out.splitlines()[0] == "row,col,real,imag" and len(out.splitlines()) == 65
    code, out, _ = run(capsys, "run", "--circuit", bell, "--format", "json")
    data = json.loads(out)
    assert data["num_qubits"] == 2 and len(data["amplitudes"]) == 4


def test_run_reports_measurement_outcomes(capsys, tmp_path):
    path = tmp_path / "m.qc"
    path.write_text("X 0; M 0; M 1")
    code, out, _ = run(capsys, "run", "--circuit", str(path), "--seed", "1")
    assert code == 0 and out.splitlines()[0] == "# outcomes 1 0"


def test_draw(capsys, bell, tmp_path):
    code, out, _ = run(capsys, "draw", "--circuit", bell)
    assert code == 0 and out.splitlines()[0] == "q0: ──H──●──"
    svg = tmp_path / "bell.svg"
    assert main(["draw", "--circuit", bell, "--format", "svg", "--out", str(svg)]) == 0
    assert svg.read_text().lstrip().startswith("<?xml")


def test_expect(capsys, bell, ham):
    code, out, _ = run(capsys, "expect", "--circuit", bell, "--hamiltonian", ham)
    assert code == 0 and float(out) == pytest.approx(1.0)


def test_demo_depol(capsys):
    code, out, _ = run(capsys, "demo-depol", "--seed", "3", "--steps", "20")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["step", "expectation"] and len(rows) == 21


def test_demo_imagtime(capsys):
    code, out, _ = run(capsys, "demo-imagtime", "--iters", "3", "--format", "json")
    data = json.loads(out)
    assert code == 0 and [d["iteration"] for d in data] == [0, 1, 2, 3]


def test_demo_trotter(capsys):
    code, out, _ = run(capsys, "demo-trotter", "--qubits", "3", "--order", "1", "--reps", "2", "--reps", "4")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["order", "reps", "gateCount", "fidelity", "noisyFidelity"]
    assert [r[1] for r in rows[1:]] == ["2", "4"]


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--qubits", "3", "--max-reps", "2", "--trials", "2", "--threads", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["reps", "gates", "mean_s", "stddev_s", "trials"]
    assert [r[:2] for r in rows[1:]] == [["1", "15"], ["2", "30"]]


def test_remote_output_matches_local(capsys, server, bell, ham, tmp_path):
    address = "{}:{}".format(*server.address)
    noisy = tmp_path / "noisy.qc"
    noisy.write_text("H 0; Depol[0.2] 0 1; M 1; Rx[0.3] 1")
    for argv in (
        ["run", "--circuit", bell],
        ["run", "--circuit", str(noisy), "--density", "--seed", "4"],
        ["expect", "--circuit", bell, "--hamiltonian", ham],
        ["demo-depol", "--steps", "5", "--seed", "2"],
    ):
        _, local, _ = run(capsys, *argv)
        code, remote, _ = run(capsys, *argv, "--remote", address)
        assert code == 0 and remote == local


@pytest.mark.parametrize(
    "text,code", [("H 0 )", 1), ("X 5", 0), ("Depol[0.9] 0", 1)]
)
def test_exit_codes_for_bad_input(capsys, tmp_path, text, code):
    path = tmp_path / "c.qc"
    path.write_text(text)
    got, _, err = run(capsys, "run", "--circuit", str(path), "--density")
    assert got == code
    if code:
        assert err.startswith("qlink:")


def test_exit_code_for_invalid_register(capsys, tmp_path):
    path = tmp_path / "c.qc"
    path.write_text("X 5")
    code, _, err = run(capsys, "run", "--circuit", str(path), "--qubits", "2")
    assert code == 1 and "qubit" in err


def test_exit_code_for_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "run", "--circuit", str(tmp_path / "missing.qc"))
    assert code == 2


def test_exit_code_for_unreachable_server(capsys, bell):
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    code, _, err = run(capsys, "run", "--circuit", bell, "--remote", f"127.0.0.1:{port}")
    assert code == 3 and "transport" in err


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "qlink", "--help"], capture_output=True, text=True, check=True
    )
    assert "demo-trotter" in out.stdout

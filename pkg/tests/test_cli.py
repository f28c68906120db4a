import json

import numpy as np
import pytest

from pinchcert.cli import run
from pinchcert.serialization import write_matrix

from conftest import rand_herm, rand_psd


@pytest.fixture
def files(tmp_path, rng):
    X = rand_herm(rng, 4)
    A = rand_psd(rng, 3, 2)
    paths = {
        "X": tmp_path / "X.json",
        "A": tmp_path / "A.json",
        "bad_trace": tmp_path / "bad_trace.json",
        "D": tmp_path / "D.json",
    }
    write_matrix(paths["X"], X)
    write_matrix(paths["A"], A * (3 / np.trace(A).real))
    write_matrix(paths["bad_trace"], np.diag([1.3, 0.5]))
    write_matrix(paths["D"], np.diag([1.0, -1.0, 1.0, -1.0]))
    return tmp_path, paths


def test_pinch_writes_certificate(files, capsys):
    tmp, p = files
    out = tmp / "cert.json"
    assert run(["pinch", str(p["X"]), "-o", str(out)]) == 0
    assert json.loads(out.read_text())["kind"] == "pinching"
    assert "pinching" in capsys.readouterr().out
    assert run(["verify", str(out)]) == 0


def test_pinch_blocks(files):
    tmp, p = files
    assert run(["pinch", str(p["D"]), "--blocks", "2,2", "-o", str(tmp / "b.json")]) == 0
    write_matrix(tmp / "two.json", np.diag([1.0, -1.0]))
    assert run(["pinch", str(tmp / "two.json"), "--blocks", "2"]) == 1


def test_decompose_infeasible_cites_flag(files, capsys):
    _, p = files
    assert run(["decompose", str(p["bad_trace"])]) == 1
    assert "integer_trace" in capsys.readouterr().err
    assert run(["decompose", str(p["A"])]) == 0


def test_verify_corrupted_unitary(files):
    tmp, p = files
    out = tmp / "avg.json"
    assert run(["average", str(p["X"]), "-o", str(out)]) == 0
    obj = json.loads(out.read_text())
    obj["payload"]["unitaries"][1]["re"][0][0] += 0.5
    out.write_text(json.dumps(obj))
    assert run(["verify", str(out)]) == 2


def test_parse_errors_exit_three(files):
    tmp, p = files
    bad = tmp / "bad.json"
    bad.write_text('{"n": 2, "re": [[1]]}')
    assert run(["pinch", str(bad)]) == 3
    assert run(["verify", str(bad)]) == 3
    assert run(["nonsense"]) == 3
    assert run(["pinch", str(p["X"]), "--blocks", "a,b"]) == 3


def test_size_cap_exit_four(files):
    _, p = files
    assert run(["average", str(p["X"]), str(p["X"]), str(p["D"]), "--max-k", "10"]) == 4


def test_nilpotent_and_shift(files):
    tmp, p = files
    assert run(["nilpotent", str(p["X"])]) == 1
    assert run(["nilpotent", str(p["X"]), "--shift-trace", "-o", str(tmp / "z.json")]) == 0


def test_combine_qpm_twoproj(files):
    tmp, p = files
    assert run(["combine", str(p["A"])]) == 0
    b = np.diag([0.8, 0.3, 0, 0])
    V = np.zeros((4, 4))
    V[2, 0] = V[3, 1] = 1
    write_matrix(tmp / "b.json", b)
    write_matrix(tmp / "V.json", V)
    assert run(["qpm", str(tmp / "b.json"), str(tmp / "V.json")]) == 0
    E = np.diag([1.0, 1.0, 0, 0])
    write_matrix(tmp / "E.json", E)
    assert run(["twoproj", str(tmp / "E.json"), str(tmp / "E.json"), "--halve"]) == 0
    write_matrix(tmp / "E1.json", np.diag([1.0, 0, 0, 0]))
    assert run(["twoproj", str(tmp / "E1.json"), str(tmp / "E1.json"), "--halve"]) == 1


def test_majorize_pipeline(files):
    tmp, p = files
    c_pinch, c_scalar = tmp / "mp.json", tmp / "ms.json"
    assert run(["majorize", "pinch", str(p["X"]), "-o", str(c_pinch)]) == 0
    D = np.diag(np.diag(json_matrix(p["X"])))
    write_matrix(tmp / "diag.json", D)
    assert run(["majorize", "scalar", str(tmp / "diag.json"), "-o", str(c_scalar)]) == 0
    assert run(["majorize", "compose", str(c_scalar), str(c_pinch), "-o", str(tmp / "mc.json")]) == 0
    assert run(["majorize", "cyclic", str(p["A"]), str(p["A"])]) == 0
    assert run(["majorize", "corner", str(p["A"]), str(p["A"])]) == 0
    assert run(["majorize", "compose", str(c_scalar)]) == 3
    assert run(["verify", "--batch", str(c_pinch), str(c_scalar), str(tmp / "mc.json")]) == 0


def test_majorize_reduce(tmp_path):
    A = np.diag([3.0, 1.0])
    write_matrix(tmp_path / "A.json", A)
    write_matrix(tmp_path / "Apad.json", np.diag([3.0, 1.0, 0.0]))
    # a sign pinching of diag(A, 0) keeps the padding block fixed
    assert run(["majorize", "pinch", str(tmp_path / "Apad.json"), "--blocks", "2,1", "-o", str(tmp_path / "c.json")]) == 0
    assert run(["majorize", "reduce", str(tmp_path / "c.json"), str(tmp_path / "A.json")]) == 0


def test_bound(capsys):
    assert run(["bound", "--norm", "1", "--invnorm", "1"]) == 0
    assert "13" in capsys.readouterr().out
    assert run(["bound", "--mu", "28"]) == 0
    assert "16" in capsys.readouterr().out
    assert run(["bound"]) == 3
    assert run(["bound", "--norm", "0.5", "--invnorm", "1"]) == 1


def test_deterministic_output(files):
    tmp, p = files
    a, b = tmp / "a.json", tmp / "b.json"
    assert run(["average", str(p["X"]), str(p["D"]), "-o", str(a)]) == 0
    assert run(["average", str(p["X"]), str(p["D"]), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def json_matrix(path):
    obj = json.loads(path.read_text())
    return np.array(obj["re"]) + 1j * np.array(obj["im"])

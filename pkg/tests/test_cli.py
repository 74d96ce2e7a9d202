import json
import math

import numpy as np
import pytest

from entroposep.cli import run, smeared_from_json, smeared_to_json
from entroposep.matrix_io import matrix_from_json, matrix_to_json, write_json
from entroposep.smeared import smear
from entroposep.states import werner


def write_state(path, m, dims=None):
    write_json(path, matrix_to_json(m, dims))
    return str(path)


@pytest.fixture
def qubit(tmp_path):
    return write_state(tmp_path / "rho.json", np.diag([0.7, 0.3]))


def test_kval(capsys):
    assert run(["kval", "--eigs", "1,0"]) == 0
    assert math.isclose(float(capsys.readouterr().out.split()[0]), math.e - 1, rel_tol=1e-9)
    assert run(["kval", "--eigs", "0,0", "--grad"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [float(t) for t in lines[1].split()] == [0.5, 0.5]


def test_kval_from_matrix(tmp_path, capsys):
    path = write_state(tmp_path / "x.json", np.diag([2.0, 1.0, 0.0]))
    assert run(["kval", "--in", path]) == 0
    assert math.isclose(float(capsys.readouterr().out), (math.e - 1) ** 2, rel_tol=1e-9)


def test_bad_flags_and_inputs(tmp_path, capsys):
    assert run(["kval", "--eigs", "a,b"]) == 1
    assert run(["kval"]) == 1
    assert run(["nosuch"]) == 1
    assert run(["solve-single", "--in", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "junk.json").write_text("{not json")
    assert run(["solve-single", "--in", str(tmp_path / "junk.json")]) == 1
    bad = write_state(tmp_path / "bad.json", np.diag([0.7, 0.7]))
    assert run(["solve-single", "--in", bad]) == 1
    assert "trace" in capsys.readouterr().err


def test_solve_single_round_trip(qubit, tmp_path, capsys):
    out = tmp_path / "ens.json"
    assert run(["solve-single", "--in", qubit, "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["kind"] == "ensemble" and obj["residual"] <= 1e-10
    x, _ = matrix_from_json(obj)
    assert run(["kval", "--in", str(out)]) == 0
    assert "entropy" in capsys.readouterr().out
    np.testing.assert_allclose(x, x.conj().T)


def test_solve_single_refuses_rank_deficient(tmp_path, capsys):
    path = write_state(tmp_path / "pure.json", np.diag([1.0, 0.0]))
    assert run(["solve-single", "--in", path]) == 2
    assert "full rank" in capsys.readouterr().err


def test_smear_round_trip(tmp_path, capsys):
    path = write_state(tmp_path / "rho.json", np.diag([0.75, 0.25]))
    out = tmp_path / "sm.json"
    assert run(["smear", "--in", path, "--out", str(out)]) == 0
    assert "order 2" in capsys.readouterr().out
    sd = smeared_from_json(json.loads(out.read_text()))
    ref = smear(np.diag([0.75, 0.25]))
    assert sd.order == 2 and np.array_equal(sd.coeffs, ref.coeffs)
    assert sd.norm_const == ref.norm_const
    assert smeared_to_json(sd) == json.loads(out.read_text())
    assert run(["smear", "--in", path, "--order", "1"]) == 2


def test_sample_ndjson(qubit, tmp_path, capsys):
    ens = tmp_path / "ens.json"
    run(["solve-single", "--in", qubit, "--out", str(ens)])
    sm = tmp_path / "sm.json"
    run(["smear", "--in", qubit, "--out", str(sm)])
    capsys.readouterr()
    for flags in (["--dim", "3"], ["--ensemble", str(ens)], ["--smeared", str(sm)]):
        assert run(["sample", *flags, "--count", "5", "--seed", "1"]) == 0
        rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert len(rows) == 5
        for r in rows:
            v = np.array(r["re"]) + 1j * np.array(r["im"])
            assert abs(np.linalg.norm(v) - 1) < 1e-12


def test_seed_env_fallback(monkeypatch, capsys):
    monkeypatch.setenv("ENTROPOSEP_SEED", "17")
    run(["sample", "--dim", "2", "--count", "3"])
    env = capsys.readouterr().out
    run(["sample", "--dim", "2", "--count", "3", "--seed", "17"])
    assert capsys.readouterr().out == env
    monkeypatch.setenv("ENTROPOSEP_SEED", "x")
    assert run(["sample", "--dim", "2", "--count", "3"]) == 1


def test_ppt(tmp_path, capsys):
    path = write_state(tmp_path / "w.json", werner(0.9).matrix, (2, 2))
    assert run(["ppt", "--in", path]) == 0
    out = capsys.readouterr().out
    assert math.isclose(float(out.split()[1]), (1 - 3 * 0.9) / 4, rel_tol=1e-9)
    plain = write_state(tmp_path / "p.json", werner(0.9).matrix)
    assert run(["ppt", "--in", plain]) == 1
    assert run(["ppt", "--in", plain, "--dims", "2,2"]) == 0


def test_bipartite_certificate_and_verify(tmp_path, capsys):
    path = write_state(tmp_path / "mm.json", np.eye(4) / 4, (2, 2))
    outs = []
    for threads in ("1", "3"):
        cert = tmp_path / f"cert{threads}.json"
        code = run(["solve-bipartite", "--in", path, "--pool", "20000", "--epochs", "2",
                    "--validate-samples", "100000", "--threshold", "0.02", "--seed", "5",
                    "--threads", threads, "--out", str(cert)])
        assert code == 0
        outs.append(cert.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["kind"] == "certificate"
    # X = 0 reproduces I/4 exactly, so it must verify
    capsys.readouterr()
    exact = write_state(tmp_path / "zero.json", np.zeros((4, 4)), (2, 2))
    assert run(["verify", "--in", path, "--cert", exact, "--samples", "200000"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_bipartite_refusal(tmp_path, capsys):
    path = write_state(tmp_path / "w.json", werner(0.9).matrix, (2, 2))
    out = tmp_path / "nc.json"
    code = run(["solve-bipartite", "--in", path, "--pool", "20000", "--epochs", "2",
                "--validate-samples", "100000", "--out", str(out)])
    assert code == 2
    text = capsys.readouterr().out
    assert "no certificate (divergence)" in text and "not a proof" in text
    obj = json.loads(out.read_text())
    assert obj["kind"] == "no_certificate" and obj["ppt_min_eigenvalue"] < -0.05


def test_verify_fails_on_wrong_certificate(tmp_path, capsys):
    path = write_state(tmp_path / "mm.json", np.eye(4) / 4, (2, 2))
    cert = write_state(tmp_path / "bad.json", np.diag([0.5, 0, 0, 0]), (2, 2))
    assert run(["verify", "--in", path, "--cert", cert, "--samples", "100000"]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_version(capsys):
    assert run(["--version"]) == 0

import csv
import io
import json

import numpy as np
import pytest

from chanclone import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    return rows[0], rows[1:]


def test_help_and_version(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "table1", "--help")[0] == 0
    code, out, _ = run(capsys, "--version")
    assert code == 0 and "chanclone" in out


def test_bad_flags_exit_2(capsys):
    assert run(capsys, "bounds", "--bogus")[0] == 2
    assert run(capsys, "protocol", "--N", "3", "--M", "2")[0] == 2
    assert run(capsys, "protocol", "--channel", "ad", "--mode", "pauli")[0] == 2
    assert run(capsys, "table1", "--interval", "1:0", "--net", "3")[0] == 2
    assert run(capsys, "ad-clone", "--N", "5", "--m-max", "2")[0] == 2
    code, _, err = run(capsys, "bounds", "--points", "1")
    assert code == 2 and "points" in err


def test_bounds_columns(capsys):
    code, out, _ = run(capsys, "bounds")
    assert code == 0
    assert out.splitlines()[0].startswith("# chanclone bounds version=")
    head, rows = parse_csv(out)
    assert head == ["z", "A", "A_tilde", "unitary", "pauli_mp"]
    vals = np.array(rows, dtype=float)
    assert len(vals) == 200
    assert vals[-1, 0] == 1.0 and vals[-1, 1] == 0.0
    assert np.all(vals[:, 1:4] >= 0) and np.all(vals[:, 1:4] <= np.pi / 4 + 1e-12)
    assert np.all(vals[:, 4] >= 0) and np.all(vals[:, 4] <= np.pi / 2 + 1e-12)
    # Pauli asymptote in z = 1/(1+λ)
    z = vals[50, 0]
    lam = (1 - z) / z
    assert vals[50, 4] == pytest.approx(np.arccos(np.exp(-3 * lam / 8)), abs=1e-11)
    assert np.allclose(vals[:, 3], np.pi / 4 * (1 - vals[:, 0]), atol=1e-11)


def test_deterministic_output(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "ad-clone", "--N", "1", "--m-max", "2", "--restarts", "2",
                   "--seed", "3", "-o", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    run(capsys, "ad-clone", "--N", "1", "--m-max", "2", "--restarts", "2", "--seed", "3",
        "--threads", "2", "-o", str(c))
    # worker count must not change the data
    assert a.read_bytes() == c.read_bytes()


def test_ad_clone_values(capsys):
    code, out, _ = run(capsys, "ad-clone", "--N", "1", "--m-max", "2", "--restarts", "3")
    assert code == 0
    head, rows = parse_csv(out)
    assert head == ["N", "M", "dummy", "mp", "coherent"]
    r1, r2 = [list(map(float, r)) for r in rows]
    assert r1[4] == 1.0
    assert r2[2] == pytest.approx(0.854, abs=1e-3)
    assert r2[3] == pytest.approx(0.925, abs=3e-3)
    assert r2[4] == pytest.approx(0.900, abs=3e-3)


def test_protocol_outputs(capsys):
    code, out, _ = run(capsys, "protocol", "--channel", "bitflip", "--mode", "ep",
                       "--estimator", "[0.0778, 0.9222]")
    assert code == 0
    last = out.strip().splitlines()[-1]
    assert last.startswith("# worst_case_fidelity=")
    assert float(last.split("=")[1]) == pytest.approx(0.922, abs=2e-3)
    code, out, _ = run(capsys, "protocol", "--channel", "phase", "--mode", "coherent",
                       "--N", "2", "--M", "2", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["command"] == "protocol"
    assert doc["worst_case_fidelity"] == pytest.approx(1.0, abs=1e-10)


def test_table1_two_point_row(capsys):
    code, out, _ = run(capsys, "table1", "--channel", "ad", "--net", "2", "--interval", "0:1",
                       "--x", "1.0")
    assert code == 0
    head, rows = parse_csv(out)
    assert head[:8] == ["channel", "P", "interval", "H", "x", "soln", "F_CJ", "avg_F_CJ"]
    row = dict(zip(head, rows[0]))
    assert row["soln"] == "yes"
    assert float(row["F_CJ"]) == pytest.approx(0.904, abs=5e-3)
    assert float(row["avg_F_CJ"]) == pytest.approx(0.935, abs=5e-3)


def test_sdp_json(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, _, _ = run(capsys, "sdp", "--channel", "ad", "--net", "2", "--interval", "0:1",
                     "-o", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["meta"]["command"] == "sdp"
    assert doc["t_star"] == pytest.approx(1.0, abs=1e-3)
    assert "process" in doc


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("CHANCLONE_THREADS", "3")
    assert cli.resolve_threads(1) == 3
    monkeypatch.delenv("CHANCLONE_THREADS")
    assert cli.resolve_threads(2) == 2
    assert cli.resolve_threads(None) >= 1
    monkeypatch.setenv("CHANCLONE_THREADS", "zero")
    with pytest.raises(cli.CliError):
        cli.resolve_threads(None)


def test_config_digest():
    a = cli.RunConfig("bounds", {"points": 10}, out="x.csv", threads=4)
    b = cli.RunConfig("bounds", {"points": 10}, out=None, threads=1)
    assert a.digest() == b.digest()
    assert a.digest() != cli.RunConfig("bounds", {"points": 11}).digest()
    assert a.digest() != cli.RunConfig("bounds", {"points": 10}, seed=1).digest()

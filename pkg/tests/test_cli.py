import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from dissipator import cli
from dissipator.bench import clustered_pair, example1, grcar
from dissipator.matrixio import read_matrix, write_matrix
from dissipator.model import ControlPair, verify_dissipating


@pytest.fixture
def files(tmp_path):
    p = example1()
    paths = {"A": tmp_path / "A.csv", "B": tmp_path / "B.csv"}
    write_matrix(paths["A"], p.A)
    write_matrix(paths["B"], p.B)
    return {k: str(v) for k, v in paths.items()}


def write_pair(tmp_path, A, B, stem, ext=".csv"):
    a, b = tmp_path / f"{stem}_A{ext}", tmp_path / f"{stem}_B{ext}"
    write_matrix(a, A)
    write_matrix(b, B)
    return str(a), str(b)


def test_check_exit_codes(tmp_path, files, capsys):
    assert cli.main(["check", files["A"], files["B"]]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasible"] is True
    a, b = write_pair(tmp_path, np.diag([1.0, -1.0]), np.array([[0.0], [1.0]]), "inf")
    assert cli.main(["check", a, b]) == 2
    a, b = write_pair(tmp_path, np.eye(5), np.ones((4, 1)), "bad")
    assert cli.main(["check", a, b]) == 1


def test_check_parse_error(tmp_path, files, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    assert cli.main(["check", str(bad), files["B"]]) == 1
    assert "bad.csv:2:2" in capsys.readouterr().err


def test_usage_errors(files):
    assert cli.main([]) == 1
    assert cli.main(["solve", files["A"], files["B"], "--method", "nope"]) == 1
    assert cli.main(["check", "/nonexistent.csv", files["B"]]) == 1


def test_solve_gl(tmp_path, files):
    out = tmp_path / "r.json"
    assert cli.main(["solve", files["A"], files["B"], "--method", "gl", "--m", "2",
                     "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert abs(d["norm_fro"] - 2.3063) <= 5e-3
    rep = cli.RunReport.from_dict(d)
    assert json.loads(rep.to_json()) == d
    pair = example1()
    assert verify_dissipating(pair, rep.load_K()).classification.value == rep.classification
    assert rep.classification == "weak"
    assert rep.input["sha256"] == cli.input_digest(pair)["sha256"]


def test_solve_reproducible(tmp_path, files):
    reports = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        cli.main(["solve", files["A"], files["B"], "--method", "spectral", "--out", str(out)])
        d = json.loads(out.read_text())
        d.pop("wall_time")
        reports.append(json.dumps(d, sort_keys=True))
    assert reports[0] == reports[1]


def test_solve_other_methods(tmp_path, files):
    for method in ("spectral", "skelton", "block"):
        out = tmp_path / f"{method}.json"
        assert cli.main(["solve", files["A"], files["B"], "--method", method, "--seed", "2",
                         "--out", str(out)]) == 0
        assert json.loads(out.read_text())["classification"] == "strict"


def test_solve_delta(tmp_path, files):
    out = tmp_path / "d.json"
    assert cli.main(["solve", files["A"], files["B"], "--method", "gl", "--m", "2",
                     "--delta", "0.1", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["shifted"]["classification"] == "weak"
    assert d["classification"] == "strict"
    assert abs(d["eigenvalues"][0] + 0.1) <= 1e-4


def test_solve_infeasible(tmp_path):
    a, b = write_pair(tmp_path, np.diag([1.0, -1.0]), np.array([[0.0], [1.0]]), "inf")
    assert cli.main(["solve", a, b, "--method", "spectral"]) == 2


def test_solve_nonconvergence_exit(tmp_path, files):
    out = tmp_path / "n.json"
    code = cli.main(["solve", files["A"], files["B"], "--method", "gl", "--m", "2",
                     "--max-iter", "1", "--out", str(out)])
    assert code == 3
    assert json.loads(out.read_text())["status"] != "converged"


def test_solve_clustered_plus(tmp_path):
    p = clustered_pair(20, 6, 0.01, seed=1)
    a, b = write_pair(tmp_path, p.A, p.B, "cl", ".mtx")
    out = tmp_path / "c.json"
    assert cli.main(["solve", a, b, "--method", "gl+", "--m", "6", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["classification"] == "weak"
    assert d["diagnostics"]["f"] <= 1e-8


def test_seed_precedence(tmp_path, files, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5}))

    def seed_of(extra):
        out = tmp_path / "s.json"
        cli.main(["--config", str(cfg), "solve", files["A"], files["B"], "--method", "spectral",
                  "--out", str(out)] + extra)
        return json.loads(out.read_text())["seed"]

    assert seed_of([]) == 5
    monkeypatch.setenv("DISSIPATOR_SEED", "7")
    assert seed_of([]) == 7
    assert seed_of(["--seed", "9"]) == 9


def test_fov_command(tmp_path, files):
    a = tmp_path / "D.csv"
    write_matrix(a, np.diag([-1.0, -2.0]))
    out = tmp_path / "w.csv"
    assert cli.main(["fov", str(a), "--angles", "64", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["theta", "re", "im"]
    vals = np.array(rows[1:], dtype=float)
    assert np.max(np.abs(vals[:, 2])) <= 1e-8
    assert np.isclose(vals[:, 1].min(), -2.0) and np.isclose(vals[:, 1].max(), -1.0)
    side = json.loads((tmp_path / "w.json").read_text())
    assert np.isclose(side["abscissa"], -1.0)


def test_fov_with_feedback(tmp_path, files, gl2_ex1):
    k = tmp_path / "K.csv"
    write_matrix(k, gl2_ex1[0].K)
    out = tmp_path / "f.json"
    assert cli.main(["fov", files["A"], "--B", files["B"], "--K", str(k), "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["abscissa"] <= 1e-6
    assert d["flat_segment_sigma"] > 0


def test_fov_grcar(tmp_path):
    a = tmp_path / "g.mtx"
    write_matrix(a, grcar(20))
    out = tmp_path / "g.json"
    assert cli.main(["fov", str(a), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["abscissa"] > 0


def test_bench_empty_seeds(tmp_path):
    assert cli.main(["bench", "--family", "table1", "--seeds", "", "--out", str(tmp_path)]) == 1


def test_bench_table1(tmp_path):
    assert cli.main(["bench", "--family", "table1", "--seeds", "1", "--jobs", "1",
                     "--out", str(tmp_path)]) == 0
    with open(tmp_path / "table1.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert abs(float(rows[0]["norm_fro"]) - 2.3063) <= 5e-3
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [1]


def test_bench_family_params_parallel(tmp_path):
    params = json.dumps([{"n": 8, "q": 2}, {"n": 10, "q": 3}])
    args = ["bench", "--family", "random_feasible", "--params", params, "--methods",
            "spectral,block", "--seeds", "1,2", "--out"]
    assert cli.main(args + [str(tmp_path / "a"), "--jobs", "2"]) == 0
    assert cli.main(args + [str(tmp_path / "b"), "--jobs", "1"]) == 0
    ra = list(csv.DictReader(open(tmp_path / "a" / "random_feasible.csv")))
    rb = list(csv.DictReader(open(tmp_path / "b" / "random_feasible.csv")))
    assert len(ra) == 8
    strip = [{k: v for k, v in r.items() if k != "wall_time"} for r in ra]
    assert strip == [{k: v for k, v in r.items() if k != "wall_time"} for r in rb]


def test_bench_partial_failure(tmp_path):
    params = json.dumps({"n": 20, "shift": 5.0})
    assert cli.main(["bench", "--family", "grcar", "--params", params, "--methods", "gl",
                     "--seeds", "1", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "grcar.csv")))
    assert rows[0]["status"].startswith("error: NoPositivePart")


def test_large_K_goes_to_file(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "INLINE_LIMIT", 4)
    p = example1()
    rep = cli.solve_report(p, "spectral", k_path=str(tmp_path / "r.K.csv"))
    assert rep.K == "r.K.csv"
    assert np.array_equal(rep.load_K(str(tmp_path)), read_matrix(tmp_path / "r.K.csv"))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dissipator", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.strip()


def test_control_pair_from_mtx_roundtrip(tmp_path):
    p = example1()
    a, b = write_pair(tmp_path, p.A, p.B, "ex", ".mtx")
    q = ControlPair(read_matrix(a), read_matrix(b))
    assert np.array_equal(q.A, p.A) and np.array_equal(q.B, p.B)

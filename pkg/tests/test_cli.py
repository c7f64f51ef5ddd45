import csv
import io
import json
import os
import subprocess
import sys

import pytest

from halfline.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--alpha", "2", "--beta", "1", "--A", "1", "--B", "1")
    doc = json.loads(out)
    assert code == 0 and doc["regime"] == "mixed"
    assert [doc["c1"], doc["c2"], doc["c3"]] == [1 / 3] * 3 and doc["extensionFlag"] is False
    _, out, _ = run(capsys, "classify", "--alpha", "5", "--beta", "0.5", "--A", "1", "--B", "1")
    assert json.loads(out)["regime"] == "reflected"


@pytest.mark.parametrize("argv", [
    ("classify", "--alpha", "-1", "--beta", "1", "--A", "1", "--B", "1"),
    ("classify", "--alpha", "abc", "--beta", "1", "--A", "1", "--B", "1"),
    ("classify", "--alpha", "1"),
    ("returnprob", "--p", "0.5", "--K", "-1"),
    ("returnprob", "--p", "1.5", "--K", "3"),
    ("localtime", "--p", "0.5", "--n", "-2"),
    ("pde", "--c1", "0.5", "--c2", "0.6", "--c3", "0"),
    ("nonsense",),
])
def test_invalid_input_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_returnprob(capsys):
    code, out, _ = run(capsys, "returnprob", "--p", "0.5", "--K", "0", "--method", "dp")
    assert code == 0 and out.splitlines() == ["k,method,F_k", "0,dp,1.0"]
    _, out, _ = run(capsys, "returnprob", "--p", "0.5", "--K", "3", "--method", "all")
    rows = {(r["k"], r["method"]): r["F_k"] for r in csv.DictReader(io.StringIO(out))}
    assert float(rows["3", "dp"]) == 0.375 and float(rows["3", "naive"]) == 0.25


def test_asymptotic_table_warns(capsys, tmp_path):
    target = tmp_path / "F.csv"
    code, _, err = run(capsys, "returnprob", "--p", "0.5", "--K", "4", "--method", "asymptotic", "--out", str(target))
    assert code == 0 and "warning: asymptotic" in err
    manifest = json.loads((tmp_path / "F.csv.manifest.json").read_text())
    assert manifest["notes"] and "not asserted" in manifest["notes"][0]
    _, _, err = run(capsys, "returnprob", "--p", "0.5", "--K", "4", "--method", "dp")
    assert err == ""


def test_localtime(capsys):
    code, out, _ = run(capsys, "localtime", "--p", "0.5", "--n", "2", "--method", "dp")
    assert code == 0 and json.loads(out)["expectedLocalTime"] == 2.0


def test_localtime_table(capsys, tmp_path):
    target = tmp_path / "lt.csv"
    code, _, _ = run(capsys, "localtime", "--p", "0.5", "--n", "10", "--compare", "1,10,100", "--out", str(target))
    assert code == 0
    rows = list(csv.DictReader(target.open()))
    assert [r["n"] for r in rows] == ["1", "10", "100"]
    assert (tmp_path / "lt.csv.manifest.json").exists()


def test_pde_neumann_constant(capsys, tmp_path):
    target = tmp_path / "u.csv"
    code, _, _ = run(capsys, "pde", "--c1", "0", "--c2", "1", "--c3", "0", "--f", "one", "--t", "0.5",
                     "--nx", "400", "--nt", "400", "--out", str(target))
    assert code == 0
    raw = target.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"x,u\n")
    us = [float(r["u"]) for r in csv.DictReader(target.open())]
    assert max(abs(u - 1) for u in us) < 1e-12
    manifest = json.loads((tmp_path / "u.csv.manifest.json").read_text())
    assert manifest["command"] == "pde" and manifest["config"]["f"] == "one"


def test_unwritable_output_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "pde", "--c1", "0", "--c2", "1", "--c3", "0", "--out", str(tmp_path / "no" / "u.csv"))
    assert code == 3 and "I/O" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": 3, "beta": 0.5, "A": 1, "B": 1}))
    _, out, _ = run(capsys, "classify", "--config", str(cfg))
    assert json.loads(out)["regime"] == "reflected"
    _, out, _ = run(capsys, "classify", "--config", str(cfg), "--beta", "2")
    assert json.loads(out)["regime"] == "absorbed"
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "classify", "--config", str(bad))[0] == 2


def test_converge_reproducible_from_manifest(capsys, tmp_path):
    target = tmp_path / "c.csv"
    argv = ["converge", "--regime", "reflected", "--N", "20,40", "--replicates", "2000", "--seed", "5",
            "--t", "0.25", "--out", str(target), "--json", str(tmp_path / "c.json")]
    assert run(capsys, *argv)[0] == 0
    first = target.read_bytes()
    rows = list(csv.DictReader(io.StringIO(first.decode())))
    assert [r["N"] for r in rows] == ["20", "40"] and {r["statistic"] for r in rows} == {"ks"}
    target.unlink()
    assert run(capsys, "converge", "--config", str(tmp_path / "c.csv.manifest.json"))[0] == 0
    assert target.read_bytes() == first


def test_simulate_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--alpha", "2", "--beta", "1", "--A", "1", "--B", "1", "--N", "20",
                       "--replicates", "500", "--threads", "1", "--path-out", str(tmp_path / "p.csv"))
    assert code == 0
    stats = {r["statistic"]: float(r["value"]) for r in csv.DictReader(io.StringIO(out))}
    assert 0 < stats["survival"] <= 1
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[:2] == ["k,state", "0,10"] and len(lines) == 1 + 201  # t = 0.5 -> 200 steps


def test_simulate_rejects_bad_params(capsys):
    code, _, err = run(capsys, "simulate", "--alpha", "0", "--beta", "0", "--A", "0.7", "--B", "0.7", "--N", "1")
    assert code == 2 and "exceeds" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "halfline", "classify", "--alpha", "3", "--beta", "2",
                          "--A", "1", "--B", "1"], capture_output=True, text=True, env=os.environ.copy())
    assert res.returncode == 0 and json.loads(res.stdout)["regime"] == "absorbed"

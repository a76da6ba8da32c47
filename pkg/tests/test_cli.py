import csv
import json
import subprocess
import sys

import pytest

from orthokey.cli import run


def report(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_counts_passes(capsys):
    code, rep = report(capsys, ["counts", "--q", "4", "--k", "2", "--deterministic"])
    assert code == 0 and rep["ok"]
    assert rep["result"]["triples"] == 125


def test_failed_check_exits_one(capsys):
    code, rep = report(capsys, ["gram", "--kind", "dirpair", "--q", "2", "--k", "3", "--deterministic"])
    assert code == 1 and not rep["ok"]


def test_usage_errors_exit_two(capsys):
    assert run(["bogus"]) == 2
    assert run(["counts", "--q", "6"]) == 2
    assert run(["simulate", "--protocol", "omniscience", "--n", "4", "--k", "2"]) == 2
    err = capsys.readouterr().err
    assert "key vanishes" in err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": 4, "colour": "red"}))
    assert run(["counts", "--config", str(cfg)]) == 2
    assert "colour" in capsys.readouterr().err


def test_flag_beats_config_beats_default(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": 4, "k": 3}))
    _, rep = report(capsys, ["counts", "--config", str(cfg), "--deterministic"])
    assert (rep["config"]["q"], rep["config"]["k"]) == (4, 3)
    _, rep = report(capsys, ["counts", "--config", str(cfg), "--q", "2", "--deterministic"])
    assert (rep["config"]["q"], rep["config"]["k"]) == (2, 3)
    _, rep = report(capsys, ["counts", "--deterministic"])
    assert (rep["config"]["q"], rep["config"]["k"]) == (2, 2)


def test_deterministic_output_is_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        argv = ["simulate", "--n", "8", "--s", "3", "--s-k", "2", "--trials", "5", "--seed", "4",
                "--deterministic", "--out", str(path)]
        assert run(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b"wall_time" not in outs[0] and b"timestamp" not in outs[0]
    assert "PASS" in capsys.readouterr().out


def test_csv_rows(tmp_path, capsys):
    path = tmp_path / "h.csv"
    code = run(["hashstats", "--ell", "1,4", "--pairs", "2000", "--csv", str(path)])
    capsys.readouterr()
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert [int(r["ell"]) for r in rows] == [1, 4]


def test_min_success_threshold(capsys):
    code, rep = report(capsys, ["simulate", "--n", "8", "--s", "0", "--s-k", "2", "--trials", "20",
                                "--min-success", "0.9", "--deterministic"])
    assert code == 1 and rep["result"]["success_rate"] < 0.9


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "orthokey.cli", "profile", "--q", "16", "--k", "2",
                           "--deterministic"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(proc.stdout)
    assert abs(rep["result"]["profile"]["i_xy"] - 4) <= 1
    assert "PASS" in proc.stderr


def test_spectrum_example(capsys):
    code, rep = report(capsys, ["spectrum", "--kind", "dirdir", "--q", "2", "--k", "2", "--deterministic"])
    res = rep["result"]
    assert code == 0
    assert abs(res["lambda2_numeric"] - 2**0.5) < 1e-9 and abs(res["lambda2_theory"] - 2**0.5) < 1e-12
    assert rep["version"] and rep["config"]["kind"] == "dirdir"

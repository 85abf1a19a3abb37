import csv
import json

import pytest

from levypassage.cli import base_id, main, theorem_table
from levypassage.asymptotics import CheckReport, write_reports


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bridge_alpha2(tmp_path, capsys):
    code, out, _ = run(capsys, "check", "--id", "bridge", "--alpha", "2", "--out", str(tmp_path))
    assert code == 0 and "pass" in out
    rows = list(csv.DictReader(open(tmp_path / "checks.csv")))
    assert float(rows[0]["target"]) == pytest.approx(0.141047, abs=1e-6)
    assert rows[0]["pass"] == "pass"
    man = json.load(open(tmp_path / "manifest.json"))
    assert len(man["config_hash"]) == 64 and man["checks"][0]["passed"]


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "check", "--id", "PZ", "--model", "brownian", "--out", str(tmp_path))
    assert code == 2 and "unsupported regime" in err
    code, _, err = run(capsys, "check", "--id", "T9.9", "--out", str(tmp_path))
    assert code == 2 and "unknown check id" in err
    code, _, err = run(capsys, "check", "--id", "T1.2", "--alpha", "1.5", "--out", str(tmp_path))
    assert code == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[sim]\nn_paths = 0\n")
    code, _, err = run(capsys, "simulate", "--config", str(bad), "--out", str(tmp_path))
    assert code == 2 and "line 2" in err and "sim.n_paths" in err
    rt = tmp_path / "rt.ini"
    rt.write_text("[sim]\nn_paths = 100\nn_excursions = 10\ndt = 0.001\nhorizon = 1\n")
    code, _, err = run(capsys, "simulate", "--config", str(rt), "--out", str(tmp_path))
    assert code == 3 and "10^4" in err


def test_simulate_outputs(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[model]\nname = cauchy\n\n[sim]\nn_paths = 2000\nhorizon = 10\n"
                   "n_excursions = 5000\nprobe_times = 1\nmaster_seed = 4\n")
    code, _, _ = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "a"))
    assert code == 0
    code, _, _ = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "b"),
                     "--workers", "4")
    assert code == 0
    for f in ("passages.csv", "excursions.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    man = json.load(open(tmp_path / "b" / "manifest.json"))
    assert man["worker_count"] == 4 and man["model"] == "cauchy"


def test_table_empty(tmp_path, capsys):
    empty = tmp_path / "checks.csv"
    empty.write_text("")
    code, out, _ = run(capsys, "table", "--in", str(empty), "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "theorem_table.csv").read_text().strip() == \
        "check,theorem,rows,result,failing_rows"
    assert out.count("\n") == 2


def test_table_mixed(tmp_path, capsys):
    reps = [CheckReport("T1.2", "brownian", 1.0, 0.05, float("nan"), 0.49, 0.5, 0.02, True),
            CheckReport("T2.6", "cauchy", 10.0, 0.5, 10.0, 0.30, 0.25, 0.01, False),
            CheckReport("T2.6.flat", "cauchy", 40.0, 2.0, 40.0, 1.0, 0.0, 3.0, True)]
    write_reports(reps, tmp_path / "checks.csv")
    code, out, _ = run(capsys, "table", "--in", str(tmp_path / "checks.csv"))
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "theorem_table.csv")))
    assert [r["check"] for r in rows] == ["T1.2", "T2.6"]
    assert rows[0]["result"] == "pass" and rows[1]["result"] == "fail"
    assert "|stat-target|=0.05" in rows[1]["failing_rows"] and "tol=" in rows[1]["failing_rows"]
    assert rows[1]["rows"] == "2"


def test_base_id():
    assert base_id("TS.7.shape") == "TS.7"
    assert base_id("T1.3x.q") == "T1.3x"
    assert base_id("T1.3") == "T1.3"
    assert base_id("PZ.eq22") == "PZ"
    assert theorem_table([]) == []


def test_meander_table_command(tmp_path, capsys):
    code, _, _ = run(capsys, "meander-table", "--alpha", "2", "--out", str(tmp_path))
    assert code == 2
    code, out, _ = run(capsys, "meander-table", "--alpha", "1.5", "--beta", "-1", "--n-paths",
                       "20000", "--n-steps", "64", "--out", str(tmp_path))
    assert code == 0
    path = out.split()[-1]
    assert open(path).readline().strip() == "y,g,g_star,ci_g,ci_g_star"

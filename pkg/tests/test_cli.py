from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from groupforge.cli import main

EX1 = [[1, 4, 3], [2, 3, 5], [2, 5, 1], [2, 5, 1], [3, 1, 1], [1, 2, 5]]


@pytest.fixture
def ex1_csv(tmp_path):
    path = tmp_path / "ex1.csv"
    path.write_text("user_id,item_id,rating\n" + "".join(
        f"u{u + 1},i{i + 1},{v}\n" for u, r in enumerate(EX1) for i, v in enumerate(r)))
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_form_from_csv(ex1_csv, capsys):
    code, out, _ = run(["form", "--ratings", ex1_csv, "--semantics", "lm", "--agg", "min",
                        "--k", 1, "--groups", 3], capsys)
    assert code == 0 and json.loads(out)["objective"] == 11


def test_exact_from_csv(ex1_csv, capsys):
    code, out, _ = run(["exact", "--ratings", ex1_csv, "--semantics", "lm", "--agg", "min",
                        "--k", 1, "--groups", 3], capsys)
    report = json.loads(out)
    assert code == 0 and report["objective"] == 12
    assert sorted(sorted(g["members"]) for g in report["groups"]) == [["u1", "u3", "u4"], ["u2", "u6"], ["u5"]]


def test_baseline_csv_output(tmp_path, capsys):
    out_path = tmp_path / "b.csv"
    code, _, _ = run(["baseline", "--fixture", "ex1", "--k", 1, "--groups", 3, "--format", "csv",
                      "--out", out_path], capsys)
    rows = list(csv.DictReader(out_path.open()))
    assert code == 0 and 1 <= len(rows) <= 3


def test_modularity_fixture(capsys):
    code, out, _ = run(["modularity", "--fixture", "proof1"], capsys)
    assert code == 0
    assert "(12, 10, 11, 10)" in out and "submodularity violated" in out


def test_modularity_explicit_partitions(capsys):
    code, out, _ = run(["modularity", "--fixture", "proof2", "--p2", "u1,u2|u3", "--move", "u3:u1"], capsys)
    assert code == 0 and "(13, 13, 12, 11)" in out and "supermodularity violated" in out


def test_export_ip(tmp_path, capsys):
    path = tmp_path / "m.lp"
    code, _, _ = run(["export-ip", "--fixture", "ex4", "--semantics", "av", "--k", 2, "--groups", 2,
                      "--out", path], capsys)
    assert code == 0 and "Subject To" in path.read_text()


def test_export_ip_rejects_sum(capsys):
    code, _, err = run(["export-ip", "--fixture", "ex4", "--agg", "sum", "--k", 2, "--groups", 2], capsys)
    assert code == 1 and "min aggregation" in err


def test_gen_then_form(tmp_path, capsys):
    path = tmp_path / "g.csv"
    assert run(["gen", "--users", 30, "--items", 6, "--seed", 2, "--out", path], capsys)[0] == 0
    code, out, _ = run(["form", "--ratings", path, "--k", 2, "--groups", 4, "--semantics", "av"], capsys)
    assert code == 0 and len(json.loads(out)["groups"]) <= 4


def test_exact_refused_beyond_budget(tmp_path, capsys):
    path = tmp_path / "g.csv"
    run(["gen", "--users", 200, "--items", 5, "--out", path], capsys)
    code, _, err = run(["exact", "--ratings", path, "--groups", 10], capsys)
    assert code == 1 and "refused" in err


def test_exact_force_needs_time_limit(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["exact", "--fixture", "ex1", "--k", "1", "--groups", "3", "--budget", "2", "--force"])
    assert exc.value.code == 2


def test_exact_force_with_time_limit_runs(capsys):
    code, out, _ = run(["exact", "--fixture", "ex1", "--k", 1, "--groups", 3, "--budget", 2,
                        "--force", "--time-limit", 30], capsys)
    assert code == 0 and json.loads(out)["objective"] == 12


def test_bench_rows(tmp_path, capsys):
    path = tmp_path / "bench.csv"
    code, out, _ = run(["bench", "--vary", "users", "--values", "40,80,120", "--items", 10, "--groups", 3,
                        "--algos", "grd,baseline", "--trials", 2, "--out", path], capsys)
    rows = list(csv.DictReader(path.open()))
    assert code == 0 and len(rows) == 3 * 2 * 2
    assert [(r["value"], r["algorithm"], r["trial"]) for r in rows[:4]] == [
        ("40", "grd", "0"), ("40", "grd", "1"), ("40", "baseline", "0"), ("40", "baseline", "1")]
    assert "runtime_ms" in out


def test_bench_exact_refused(capsys):
    code, _, err = run(["bench", "--vary", "users", "--values", "200", "--algos", "grd,exact"], capsys)
    assert code == 1 and "exact refused" in err


def test_bench_thread_env(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("GROUPFORGE_THREADS", "3")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--vary", "k", "--values", "1,2,3", "--users", 9, "--items", 8, "--groups", 3,
            "--algos", "grd,exact", "--trials", 2]
    assert run(args + ["--out", a], capsys)[0] == 0
    monkeypatch.setenv("GROUPFORGE_THREADS", "1")
    assert run(args + ["--out", b], capsys)[0] == 0
    strip = lambda p: [{k: v for k, v in r.items() if not k.endswith("_ms")} for r in csv.DictReader(p.open())]
    assert strip(a) == strip(b)


def test_bad_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("GROUPFORGE_THREADS", "lots")
    code, _, err = run(["bench", "--values", "10", "--algos", "grd"], capsys)
    assert code == 1 and "GROUPFORGE_THREADS" in err


@pytest.mark.parametrize("argv", [["nope"], ["form", "--bogus"], ["form"], []])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_missing_file_is_error(tmp_path, capsys):
    code, _, err = run(["form", "--ratings", tmp_path / "none.csv"], capsys)
    assert code == 1 and err.startswith("error:")


def test_incomplete_file_policies(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("a,x,1\na,y,4\nb,y,5\n")
    assert run(["form", "--ratings", path, "--k", 1, "--groups", 2], capsys)[0] == 1
    assert run(["form", "--ratings", path, "--k", 1, "--groups", 2, "--missing", "fill-min"], capsys)[0] == 0


def test_timing_flag(capsys):
    _, out, _ = run(["form", "--fixture", "ex2", "--k", 2, "--groups", 2, "--timing"], capsys)
    assert json.loads(out)["runtime_ms"] >= 0
    _, out, _ = run(["form", "--fixture", "ex2", "--k", 2, "--groups", 2], capsys)
    assert json.loads(out)["runtime_ms"] is None


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "groupforge", "modularity", "--fixture", "proof2"],
                          capture_output=True, text=True, check=True)
    assert "(13, 13, 12, 11)" in proc.stdout

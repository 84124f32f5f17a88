import csv

import pytest

from distcache.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, OUT_ENV, ExperimentSpec, main, parse_seeds
from distcache.keyfile import read_keys

TINY = ["--preset", "tiny"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_seeds():
    assert parse_seeds("3") == [0, 1, 2]
    assert parse_seeds("3,7") == [3, 7]


def test_simulate_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", *TINY, "--uniform-k", "16", "-n", "20000",
                 "--seeds", "30", "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert len(rows) == 60
    assert {r["tag"] for r in rows} == {"COUNT", "DATA"}
    assert {r["k"] for r in rows} == {"16"}


def test_simulate_n0(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["simulate", *TINY, "--uniform-k", "8", "-n", "0", "--out", str(out)]) == EXIT_OK
    assert all(int(r["misses"]) == 0 for r in _rows(out))


def test_simulate_is_reproducible(tmp_path):
    args = ["simulate", *TINY, "--geometric-k", "32", "-n", "30000", "--seeds", "4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--out", str(a)]) == EXIT_OK
    assert main([*args, "--jobs", "2", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_predict_values(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--formula", "cor1", "--uniform-k", "8", "-B", "8", "-C", "64",
                 "-n", "1000000", "--out", str(out)]) == EXIT_OK
    (row,) = _rows(out)
    assert float(row["upper_rate_per_round"]) == pytest.approx(0.228515625, abs=1e-12)
    out2 = tmp_path / "p6.csv"
    assert main(["predict", "--formula", "thm6", "-g", "8", "-K", "4", "-B", "8", "-C", "64",
                 "-n", "1000000", "--out", str(out2)]) == EXIT_OK
    (row,) = _rows(out2)
    assert float(row["upper_rate_per_round"]) == pytest.approx(0.5796875, abs=1e-12)


def test_predict_inapplicable(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--formula", "thm3", "--uniform-k", "256", "-B", "4", "-C", "16",
                 "--out", str(out)]) == EXIT_OK
    assert _rows(out)[0]["status"] == "inapplicable"


def test_compare_pass_and_mismatch(tmp_path, capsys):
    s, p, c = tmp_path / "s.csv", tmp_path / "p.csv", tmp_path / "c.csv"
    common = [*TINY, "--uniform-k", "16", "-n", "200000"]
    assert main(["simulate", *common, "--seeds", "5", "--out", str(s)]) == EXIT_OK
    assert main(["predict", *common, "--formula", "thm2,cor2", "--out", str(p)]) == EXIT_OK
    assert main(["compare", str(s), str(p), "--out", str(c)]) == EXIT_OK
    (row,) = _rows(c)
    assert row["verdict"] == "PASS"
    assert "PASS" in capsys.readouterr().err
    q = tmp_path / "q.csv"
    assert main(["predict", *TINY, "--uniform-k", "32", "-n", "200000", "--formula", "thm2",
                 "--out", str(q)]) == EXIT_OK
    assert main(["compare", str(s), str(q)]) == EXIT_USAGE


def test_compare_reports_failure(tmp_path):
    s, p = tmp_path / "s.csv", tmp_path / "p.csv"
    common = [*TINY, "--uniform-k", "16", "-n", "100000"]
    assert main(["simulate", *common, "--seeds", "3", "--out", str(s)]) == EXIT_OK
    assert main(["predict", *common, "--formula", "cor2", "--out", str(p)]) == EXIT_OK
    rows = _rows(p)
    rows[0]["upper_rate_per_round"] = "0.01"
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    assert main(["compare", str(s), str(p), "--out", str(tmp_path / "c.csv")]) == EXIT_FAIL


def test_genkeys_and_sortbench(tmp_path, capsys):
    k = tmp_path / "k.bin"
    assert main(["genkeys", "-n", "20000", "--fmt", "float64", "--seed", "3", "--out", str(k)]) == EXIT_OK
    data, fmt = read_keys(k)
    assert data.size == 20000 and fmt.e == 11
    out = tmp_path / "b.csv"
    assert main(["sortbench", *TINY, "--keys", str(k), "--out", str(out)]) == EXIT_OK
    assert "correct=true" in capsys.readouterr().err
    rows = _rows(out)
    assert {r["plan"] for r in rows} == {"tuned", "naive"}
    assert all(r["correct"] == "true" or r["correct"] == "True" for r in rows)


def test_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "o"))
    assert main(["predict", "--formula", "seq", "--uniform-k", "8", "-B", "8", "-C", "64"]) == EXIT_OK
    assert (tmp_path / "o" / "predict.csv").exists()


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["simulate", "-n", "10"],  # no class count
    ["simulate", "--uniform-k", "8", "-B", "3"],
    ["simulate", "--uniform-k", "8", "-n", "-1"],
    ["genkeys", "-n", "10"],  # --out missing
    ["sortbench", "--keys", "/nonexistent/k.bin"],
])
def test_usage_errors(argv, tmp_path):
    assert main(argv) == EXIT_USAGE


def test_experiment_spec_json():
    s = ExperimentSpec("simulate", 8, 128, "uniform", 16, 100, [0, 1], None, {"variant": "inplace"})
    assert ExperimentSpec.from_json(s.to_json()) == s

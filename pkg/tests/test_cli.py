import csv
import io
import json

import numpy as np
import pytest

from bbmin import analytic, cli
from bbmin.model import Segment, knots_to_csv
from bbmin.quadrature import interval_probs
from knot_sets import QUARTER_ZEROS, RISING, FOUR_FLAT, SIXTEEN_RISING


@pytest.fixture
def knots_file(tmp_path):
    def write(k, name="k.csv"):
        p = tmp_path / name
        p.write_text(knots_to_csv(k))
        return str(p)
    return write


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    """First CSV block of the output as a list of dicts."""
    block = text.split("\n\n")[0]
    return list(csv.DictReader(io.StringIO(block)))


def test_interval_prob_four_flat(capsys, knots_file):
    code, out, _ = run(capsys, "interval-prob", knots_file(FOUR_FLAT), "--index", 0)
    assert code == 0
    (row,) = table(out)
    assert row["prob"].startswith("0.057220620721")
    assert row["converged"] == "true"


def test_interval_prob_eps_contract(capsys, knots_file):
    f = knots_file(SIXTEEN_RISING)
    lo = table(run(capsys, "interval-prob", f, "--index", 0, "--eps", 1e-3)[1])[0]
    hi = table(run(capsys, "interval-prob", f, "--index", 0, "--eps", 1e-9)[1])[0]
    assert abs(float(lo["prob"]) - float(hi["prob"])) <= 1e-3


def test_interval_prob_all_and_json(capsys, knots_file):
    f = knots_file(FOUR_FLAT)
    code, out, _ = run(capsys, "interval-prob", f, "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["schema_version"] == 1
    assert obj["config"]["knots"] == [list(r) for r in FOUR_FLAT.rows]
    assert obj["config"]["eps"] == 1e-9
    rows = table(run(capsys, "interval-prob", f)[1])
    # csv and json carry the same numbers
    assert [float(r["prob"]) for r in rows] == [r["prob"] for r in obj["intervals"]]


def test_interval_prob_nonconvergence_exit(capsys, knots_file):
    code, out, _ = run(capsys, "interval-prob", knots_file(SIXTEEN_RISING), "--index", 0, "--eps", 1e-15,
                       "--max-evals", 45)
    assert code == 2
    assert "false" in out


def test_missing_and_malformed_files(capsys, tmp_path, knots_file):
    code, _, err = run(capsys, "interval-prob", tmp_path / "missing.csv")
    assert code == 1 and "no such file" in err
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x\n0,0\n0.5,oops\n1,0\n")
    code, _, err = run(capsys, "interval-prob", bad)
    assert code == 1 and "line 3" in err
    dup = tmp_path / "dup.csv"
    dup.write_text("t,x\n0,0\n0.5,0\n0.5,1\n1,0\n")
    code, _, err = run(capsys, "simulate", dup)
    assert code == 1 and "row 2" in err


def test_output_file(capsys, knots_file, tmp_path):
    out = tmp_path / "o.csv"
    code, printed, _ = run(capsys, "interval-prob", knots_file(FOUR_FLAT), "--out", out)
    assert code == 0 and printed == ""
    assert out.read_text().startswith("index,prob")


def test_pairwise_modes(capsys):
    code, out, _ = run(capsys, "pairwise", "--closed-d2", 0.1837)
    (row,) = table(out)
    assert code == 0 and abs(float(row["prob"]) - 0.6) < 5e-5
    assert float(row["discrepancy"]) < 1e-7
    (row,) = table(run(capsys, "pairwise", "--closed-l2", 0.5)[1])
    assert float(row["prob"]) == 0.5
    (row,) = table(run(capsys, "pairwise", "--l1", 0.5, "--d1", 0, "--l2", 0.5, "--d2", 0, "--xi", 0)[1])
    assert abs(float(row["prob"]) - 0.5) < 1e-9
    assert row["closed_form"] == ""


@pytest.mark.parametrize("argv", [
    ["--closed-d2", "1", "--closed-l2", "0.5"],
    ["--closed-d2", "1", "--l1", "0.5"],
    ["--l1", "0.5", "--d1", "0"],
    [],
])
def test_pairwise_conflicts_are_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as e:
        cli.main(["pairwise", *argv])
    assert e.value.code == 2


def test_pairwise_bad_values(capsys):
    assert run(capsys, "pairwise", "--closed-l2", 2)[0] == 1
    assert run(capsys, "pairwise", "--l1", -1, "--d1", 0, "--l2", 0.5, "--d2", 0, "--xi", 0)[0] == 1


def test_simulate_min_mean(capsys, knots_file):
    code, out, _ = run(capsys, "simulate", knots_file(QUARTER_ZEROS), "--draws", 10_000, "--seed", 1)
    vals = np.array([float(r["value"]) for r in table(out)])
    assert code == 0 and len(vals) == 10_000
    assert abs(vals.mean() + 0.49) < 0.01


def test_simulate_is_deterministic(capsys, knots_file):
    f = knots_file(FOUR_FLAT)
    a = run(capsys, "simulate", f, "--draws", 500, "--seed", 3, "--what", "argmin")[1]
    b = run(capsys, "simulate", f, "--draws", 500, "--seed", 3, "--what", "argmin")[1]
    c = run(capsys, "simulate", f, "--draws", 500, "--seed", 4, "--what", "argmin")[1]
    assert a == b and a != c


def test_simulate_histogram(capsys, knots_file):
    code, out, _ = run(capsys, "simulate", knots_file(QUARTER_ZEROS), "--draws", 2000, "--bins", 20)
    hist = list(csv.DictReader(io.StringIO(out.split("\n\n")[1])))
    assert list(hist[0]) == ["bin_center", "count", "kde"]
    assert sum(int(r["count"]) for r in hist) == 2000


def test_simulate_argmin_matches_interval_probs(capsys, knots_file):
    n = 20_000
    code, out, _ = run(capsys, "simulate", knots_file(RISING), "--draws", n, "--what", "argmin", "--seed", 5)
    rows = table(out)
    loc = np.array([float(r["location"]) for r in rows])
    seg = np.array([int(r["segment"]) for r in rows])
    assert loc.min() < 0.05 and loc.max() > 0.95
    p = np.array([r.value for r in interval_probs(RISING)])
    freq = np.bincount(seg, minlength=4) / n
    assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / n))


def test_simulate_freq(capsys, knots_file):
    code, out, _ = run(capsys, "simulate", knots_file(FOUR_FLAT), "--what", "freq", "--draws", 10_000)
    rows = table(out)
    assert code == 0 and len(rows) == 4
    assert sum(int(r["count"]) for r in rows) == 10_000
    assert run(capsys, "simulate", knots_file(FOUR_FLAT), "--what", "freq", "--draws", 10)[0] == 1


def test_benchmark_outputs(capsys, tmp_path):
    reps = tmp_path / "reps.csv"
    code, out, _ = run(capsys, "benchmark", "--bridge", 0, 1, "--n", "2,3", "--strategies", "eqd,rnd",
                       "--replicates", 5, "--inner", 20, "--replicates-out", reps)
    assert code == 0
    summary = table(out)
    assert list(summary[0]) == ["strategy", "n_points", "mean", "var", "ci_lo", "ci_hi"]
    assert len(summary) == 4
    rows = list(csv.DictReader(io.StringIO(reps.read_text())))
    assert list(rows[0]) == ["strategy", "n_points", "replicate", "error"]
    assert len(rows) == 20


def test_benchmark_two_replicates(capsys):
    code, out, _ = run(capsys, "benchmark", "--replicates", 2, "--inner", 10, "--summary-only")
    assert code == 0
    for r in table(out):
        assert float(r["ci_hi"]) > float(r["ci_lo"])


def test_benchmark_workers_from_environment(capsys, monkeypatch):
    argv = ["benchmark", "--n", "2", "--replicates", 6, "--inner", 20, "--summary-only", "--seed", 4]
    serial = run(capsys, *argv)[1]
    monkeypatch.setenv("BBMIN_THREADS", "2")
    assert cli.default_workers() == 2
    assert run(capsys, *argv)[1] == serial


def test_benchmark_two_points_reference(capsys):
    code, out, _ = run(capsys, "benchmark", "--bridge", 0, 1, "--n", 2, "--strategies", "eqd,rnd",
                       "--replicates", 1000, "--summary-only", "--seed", 1)
    eqd, rnd = table(out)
    assert float(eqd["ci_lo"]) <= 0.2517 and float(eqd["ci_hi"]) >= 0.2390
    assert float(rnd["ci_lo"]) <= 0.2729 and float(rnd["ci_hi"]) >= 0.2547


def test_benchmark_eqp_eight_points_reference(capsys):
    code, out, _ = run(capsys, "benchmark", "--bridge", 0, 1, "--n", 8, "--strategies", "eqp",
                       "--replicates", 1000, "--summary-only", "--seed", 2)
    (eqp,) = table(out)
    assert float(eqp["ci_lo"]) <= 0.1387 and float(eqp["ci_hi"]) >= 0.1275


def test_benchmark_unsupported(capsys):
    code, _, err = run(capsys, "benchmark", "--bridge", 0, 40, "--strategies", "eqp", "--replicates", 2)
    assert code == 3 and "unsupported" in err


def test_eqp_knots(capsys):
    code, out, _ = run(capsys, "eqp-knots", "--bridge", 0, 0, "--n", 3)
    assert [float(r["t"]) for r in table(out)] == pytest.approx([0.25, 0.5, 0.75], abs=1e-15)
    code, out, _ = run(capsys, "eqp-knots", "--bridge", 0, 1, "--n", 5)
    for k, r in enumerate(table(out), start=1):
        assert analytic.argmin_cdf(Segment(0, 1, 0, 1), float(r["t"])) == pytest.approx(k / 6, abs=1e-8)
    assert run(capsys, "eqp-knots", "--bridge", 0, 40, "--n", 2)[0] == 3
    with pytest.raises(SystemExit) as e:
        cli.main(["eqp-knots", "--n", "0"])
    assert e.value.code == 2


def test_reals_round_trip(capsys, knots_file):
    out = run(capsys, "eqp-knots", "--bridge", 0, 1, "--n", 2)[1]
    obj = json.loads(run(capsys, "eqp-knots", "--bridge", 0, 1, "--n", 2, "--format", "json")[1])
    assert [float(r["t"]) for r in table(out)] == [p["t"] for p in obj["points"]]

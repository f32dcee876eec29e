import csv
import json

import numpy as np
import pytest

from convexpoincare.cli import main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "d0": write(tmp_path / "d0.json", {"dimension": 1, "points": [[0.0]]}),
        "two": write(tmp_path / "two.json", {"dimension": 1, "points": [[-1.0], [1.0]]}),
        "bern": write(tmp_path / "bern.json", {"dimension": 1, "points": [[0.0], [1.0]],
                                               "weights": [0.5, 0.5]}),
        "quad": write(tmp_path / "quad.json", {"kind": "power", "params": {"c": 1, "r": 2}}),
        "zero": write(tmp_path / "zero.json", {"pieces": [{"slope": [0.0], "intercept": 0.0}]}),
        "lin": write(tmp_path / "lin.json", {"pieces": [{"slope": [0.3], "intercept": 0.0}]}),
        "dir": tmp_path,
    }


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def result(text):
    doc = json.loads(text)
    assert doc["schema"] == 1 and "version" in doc
    return doc["result"]


def test_weak_ot_directions(capsys, files):
    code, out, _ = run(capsys, "ot", "weak", "--from", files["d0"], "--to", files["two"],
                       "--cost", files["quad"])
    assert code == 0 and result(out)["cost"] == pytest.approx(0.0, abs=1e-12)
    code, out, _ = run(capsys, "ot", "weak", "--from", files["two"], "--to", files["d0"],
                       "--cost", files["quad"])
    assert code == 0 and result(out)["cost"] == pytest.approx(1.0, abs=1e-12)


def test_standard_ot_and_w2(capsys, files):
    code, out, _ = run(capsys, "ot", "standard", "--from", files["d0"], "--to", files["two"],
                       "--cost", files["quad"])
    assert result(out)["cost"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "w2", "--mu", files["two"], "--nu", files["d0"])
    assert result(out)["w2_squared"] == pytest.approx(1.0)


def test_verify_zero_function(capsys, files):
    code, out, _ = run(capsys, "verify", "dual-t-", "--mu", files["bern"], "--cost",
                       files["quad"], "--function", files["zero"])
    rep = result(out)["reports"][0]
    assert code == 0 and rep["details"]["max_value"] == 1.0 and rep["passed"]


def test_constants_pipeline(capsys):
    code, out, _ = run(capsys, "constants", "pipeline", "--lambda", 2, "--c", 0.5)
    assert code == 0
    assert result(out)["derived"]["C"] == pytest.approx(0.867379, abs=1e-6)


def test_constants_other(capsys, files):
    code, out, _ = run(capsys, "constants", "tensorize", "--lambda", 4)
    assert result(out)["ratio"] == pytest.approx(32.81139162496822, rel=1e-9)
    code, out, _ = run(capsys, "constants", "perturb", "--lambda", 2, "--osc", 0)
    assert result(out)["lambda"] == 2.0
    code, out, _ = run(capsys, "constants", "mixture", "--lambda0", 2, "--lambda1", 2,
                       "--mu0", files["two"], "--mu1", files["d0"])
    assert result(out)["lambda"] == pytest.approx(1 / (0.5 + 2))
    code, _, err = run(capsys, "constants", "tensorize")
    assert code == 2 and "--lam" in err


def test_input_errors(capsys, files):
    bad = write(files["dir"] / "bad.json", {"dimension": 1, "points": [[0]], "extra": 1})
    code, _, err = run(capsys, "entropy", "--mu", bad, "--nu", files["d0"])
    assert code == 2 and "extra" in err
    broken = files["dir"] / "broken.json"
    broken.write_text('{"dimension": 1,\n "points": [[0]')
    code, _, err = run(capsys, "entropy", "--mu", str(broken), "--nu", files["d0"])
    assert code == 2 and "line 2" in err
    code, _, _ = run(capsys, "entropy", "--mu", str(files["dir"] / "missing.json"),
                     "--nu", files["d0"])
    assert code == 2
    code, _, _ = run(capsys, "constants", "pipeline", "--lambda", 2, "--c", 5)
    assert code == 2
    code, _, _ = run(capsys, "verify", "dual-t+", "--mu", files["bern"], "--cost",
                     files["quad"], "--random", 2, "--tolerance", "bogus=1")
    assert code == 2
    code, _, _ = run(capsys, "nonsense")
    assert code == 2
    future = write(files["dir"] / "future.json", {"dimension": 1, "points": [[0]], "schema": 2})
    code, _, _ = run(capsys, "w2", "--mu", future, "--nu", files["d0"])
    assert code == 2


def test_violation_exit_code(capsys, files):
    code, out, _ = run(capsys, "verify", "transport", "--mu", files["two"], "--cost",
                       files["quad"], "--random", 10)
    assert code == 1
    assert not all(r["passed"] for r in result(out)["reports"])


def test_resource_exit_code(capsys, files):
    rng = np.random.default_rng(0)
    big = write(files["dir"] / "big.json", {"dimension": 1, "points": rng.normal(size=(120, 1)).tolist()})
    code, _, err = run(capsys, "w2", "--mu", big, "--nu", big)
    assert code == 3 and "resource" in err


def test_norm_cost_hopflax(capsys, files):
    code, out, _ = run(capsys, "norm", "dual", "--cost", files["quad"], "--p", 4, "--x", "1.5")
    assert result(out)["dual_norm"] == pytest.approx(3.0, rel=1e-9)
    code, out, _ = run(capsys, "norm", "orlicz", "--cost", files["quad"], "--p", 4, "--x", "1.5")
    assert result(out)["orlicz_norm"] == pytest.approx(0.75, rel=1e-9)
    code, out, _ = run(capsys, "cost", "eval", "--cost", files["quad"], "--x", "2")
    assert result(out)["value"] == 4.0
    code, out, _ = run(capsys, "cost", "legendre", "--cost", files["quad"], "--x", "2")
    assert result(out)["conjugate"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "hopflax", "eval", "--function", files["lin"], "--cost",
                       files["quad"], "--x", "1", "--t", "1")
    assert result(out)["value"] == pytest.approx(0.3 - 0.3 ** 2 / 4)
    code, out, _ = run(capsys, "hopflax", "semigroup", "--function", files["lin"], "--cost",
                       files["quad"], "--h", 0.1)
    assert code == 0 and result(out)["passed"]
    code, out, _ = run(capsys, "hopflax", "residual", "--function", files["lin"], "--h", 0.05)
    assert result(out)["max_residual"] <= 1e-8


def test_poincare_and_bounds(capsys, files):
    code, out, _ = run(capsys, "poincare", "estimate", "--mu", files["bern"], "--restarts", 8)
    assert 0.45 <= result(out)["best_ratio"] <= 0.5 + 1e-6
    code, out, _ = run(capsys, "bounds", "selfnorm_moment", "--param", "p=1")
    assert result(out)["value"] == 3.0
    code, out, _ = run(capsys, "bounds", "lower_tail", "--param", "lam=2", "--param", "M=0.5",
                       "--param", "G=1", "--param", "t=16")
    assert code == 0 and result(out)["applicable"] is False
    code, _, _ = run(capsys, "bounds", "upper_tail", "--param", "lam=2")
    assert code == 2


def test_plot_data(capsys, files):
    path = files["dir"] / "curve.csv"
    code, _, _ = run(capsys, "bounds", "upper_tail", "--param", "lam=2", "--param", "L=1",
                     "--plot-data", path, "--mu", files["bern"], "--function", files["lin"],
                     "--points", 5, "--t-max", 1)
    rows = list(csv.DictReader(open(path)))
    assert code == 0 and len(rows) == 5
    assert float(rows[0]["bound"]) == 8.0 and float(rows[0]["exact"]) == 1.0
    assert all(float(r["exact"]) <= float(r["bound"]) for r in rows)


def test_csv_and_output(capsys, files):
    path = files["dir"] / "rep.csv"
    code, out, _ = run(capsys, "verify", "dual-t+", "--mu", files["bern"], "--cost",
                       files["quad"], "--random", 5, "--format", "csv", "--output", path)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(open(path)))
    assert rows[0]["inequality"] == "dual-t+" and rows[0]["instances"] == "5"


def test_suite_deterministic_and_jobs(capsys, tmp_path):
    outs = []
    for jobs in (1, 1, 2):
        p = tmp_path / f"s{len(outs)}.json"
        code, _, _ = run(capsys, "verify", "suite", "--random", 6, "--jobs", jobs, "--output", p)
        assert code == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    code, _, _ = run(capsys, "verify", "suite", "--random", 6, "--seed", 1,
                     "--output", tmp_path / "other.json")
    assert (tmp_path / "other.json").read_bytes() != outs[0]

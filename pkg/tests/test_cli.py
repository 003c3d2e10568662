import csv
import io
import json
import math
from functools import partial

import numpy as np
import pytest
from scipy import special

from smoothrank import kernels as K
from smoothrank.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_VERIFY, main, read_sample, DataError
from smoothrank.smoothed import smoothed_wilcoxon_moments


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


def write_data(path, xs, ys):
    lines = ["group,value"] + [f"x,{float(v)!r}" for v in xs] + [f"y,{float(v)!r}" for v in ys]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def parse_fields(text):
    return dict(line.split(": ", 1) for line in (l.strip() for l in text.splitlines()) if line)


@pytest.fixture
def data(tmp_path):
    gen = np.random.default_rng(3)
    return write_data(tmp_path / "d.csv", gen.standard_normal(12), gen.standard_normal(14) + 0.5)


def test_read_sample(tmp_path):
    s = read_sample(write_data(tmp_path / "a.csv", [1, 2], [3]))
    assert (s.m, s.n) == (2, 1)
    bad = {
        "nohead.csv": "x,1\ny,2\n",
        "group.csv": "group,value\nx,1\nz,2\n",
        "value.csv": "group,value\nx,1\ny,abc\n",
        "inf.csv": "group,value\nx,1\ny,inf\n",
        "empty.csv": "group,value\nx,1\n",
        "fields.csv": "group,value\nx,1,2\ny,2\n",
    }
    for name, text in bad.items():
        (tmp_path / name).write_text(text)
        with pytest.raises(DataError):
            read_sample(tmp_path / name)
    with pytest.raises(DataError):
        read_sample(tmp_path / "missing.csv")


def test_test_all_methods(data):
    for method in ("median", "wilcoxon", "ttest", "smoothed-median", "smoothed-wilcoxon"):
        code, text = run(["test", data, "--method", method])
        assert code == EXIT_OK
        fields = parse_fields(text)
        assert fields["decision"] in ("reject", "retain")
        assert 0 <= float(fields["p_value"]) <= 1


def test_test_csv_output(data):
    code, text = run(["--output", "csv", "test", data, "--method", "wilcoxon"])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows[0]["method"] == "wilcoxon" and rows[0]["p_value_kind"] == "exact"


def test_wilcoxon_all_above(tmp_path):
    path = write_data(tmp_path / "d.csv", [1.0, 2.0, 3.0], [4.0, 5.0, 6.0, 7.0])
    code, text = run(["test", path, "--method", "wilcoxon"])
    fields = parse_fields(text)
    assert code == EXIT_OK
    assert float(fields["statistic"]) == 12
    assert float(fields["p_value"]) == pytest.approx(1 / math.comb(7, 3), abs=1e-15)


def test_smoothed_wilcoxon_tiny_bandwidth(tmp_path):
    xs, ys = [0.3, 1.1, 2.5, 0.9], [1.7, 2.2, 0.1, 3.3, 2.9]
    path = write_data(tmp_path / "d.csv", xs, ys)
    code, text = run(["test", path, "--method", "smoothed-wilcoxon", "--bandwidth", "fixed:1e-12"])
    assert code == EXIT_OK
    w2 = sum(y >= x for x in xs for y in ys)
    mean, var = smoothed_wilcoxon_moments(4, 5)
    fields = parse_fields(text)
    assert float(fields["statistic"]) == w2
    assert float(fields["p_value"]) == pytest.approx(float(special.ndtr(-(w2 - mean) / math.sqrt(var))), abs=1e-15)


def test_sidedness_mismatch_exit(data):
    assert run(["test", data, "--method", "smoothed-median", "--kernel", "epanechnikov"])[0] == EXIT_CONFIG
    assert run(["test", data, "--method", "smoothed-wilcoxon", "--kernel", "remark26-exp"])[0] == EXIT_CONFIG
    assert run(["test", data, "--method", "median", "--kernel", "gaussian"])[0] == EXIT_CONFIG
    assert run(["test", data, "--method", "smoothed-median", "--kernel", "nope"])[0] == EXIT_CONFIG


def test_data_error_exits(tmp_path):
    (tmp_path / "d.csv").write_text("group,value\nx,1\n")
    assert run(["test", str(tmp_path / "d.csv"), "--method", "median"])[0] == EXIT_DATA
    assert run(["test", str(tmp_path / "none.csv"), "--method", "median"])[0] == EXIT_DATA
    path = write_data(tmp_path / "t.csv", [1.0], [2.0, 3.0])
    assert run(["test", path, "--method", "ttest"])[0] == EXIT_DATA


def test_argument_errors_exit_config(data):
    assert run(["test", data, "--method", "sign"])[0] == EXIT_CONFIG
    assert run(["test", data, "--method", "median", "--alpha", "2"])[0] == EXIT_CONFIG
    assert run(["--seed", "-1", "efficiency", "1"])[0] == EXIT_CONFIG
    assert run([])[0] == EXIT_CONFIG


def test_bootstrap_bandwidth_reproducible(data):
    argv = ["test", data, "--method", "smoothed-median", "--bandwidth", "bootstrap:L=50,alpha=0.05"]
    a = run(["--seed", "5"] + argv)
    b = run(argv + ["--seed", "5"])
    assert a == b and a[0] == EXIT_OK


def test_efficiency(tmp_path):
    for table, tol, count in ((1, 0.005, 9), (2, 0.01, 3)):
        code, text = run(["--output", "csv", "efficiency", str(table)])
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == count
        for row in rows:
            assert 0 <= float(row["abs_deviation"]) <= tol
    assert run(["efficiency", "3"])[0] == EXIT_CONFIG


def test_kernels_list():
    code, text = run(["--output", "csv", "kernels", "list"])
    assert code == EXIT_OK
    assert len(list(csv.DictReader(io.StringIO(text)))) == 6


def test_kernels_verify_pristine_catalog():
    code, _ = run(["kernels", "verify"])
    assert code == EXIT_OK


def test_kernels_verify_clean_subset():
    assert run(["kernels", "verify", "simple-poly", "epanechnikov", "gaussian"])[0] == EXIT_OK


def test_kernels_verify_unknown_name():
    assert run(["kernels", "verify", "triangular"])[0] == EXIT_CONFIG


def test_kernels_verify_corrupted_fixture(monkeypatch):
    coeffs = (2.0, -1.0)  # integrates to 3/2 on [0, 1]
    broken = K.KernelSpec(
        "broken", "one_sided", partial(K._poly_density, coeffs), partial(K._poly_antiderivative, coeffs),
        (0.0, 1.0), frozenset({"normalized"}),
    )
    monkeypatch.setitem(K.CATALOG, "broken", broken)
    code, text = run(["kernels", "verify", "broken"])
    assert code == EXIT_VERIFY
    assert "FAIL" in text


def _config(tmp_path, **extra):
    data = {"kind": "power", "name": "small", "reps": 1200, "sizes": [[10, 10], "U*(5,9)"],
            "thetas": [0.0, 0.5], "alphas": [0.05], "models": ["normal", "t1"], "seed": 11}
    data.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_simulate_workers_identical_bytes(tmp_path):
    cfg = _config(tmp_path)
    out1, out8 = tmp_path / "w1", tmp_path / "w8"
    assert run(["simulate", cfg, "--workers", "1", "--out-dir", str(out1)])[0] == EXIT_OK
    assert run(["simulate", cfg, "--workers", "8", "--out-dir", str(out8)])[0] == EXIT_OK
    assert (out1 / "small.csv").read_bytes() == (out8 / "small.csv").read_bytes()


def test_simulate_csv_stdout_matches_file(tmp_path):
    cfg = _config(tmp_path, reps=200, output="csv")
    code, text = run(["simulate", cfg, "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    assert text == (tmp_path / "small.csv").read_text()


def test_simulate_seed_override(tmp_path):
    cfg = _config(tmp_path, reps=200)
    a = run(["--output", "csv", "simulate", cfg, "--out-dir", str(tmp_path)])[1]
    b = run(["--output", "csv", "--seed", "12", "simulate", cfg, "--out-dir", str(tmp_path)])[1]
    assert a != b
    assert "# seed: 12" in b


def test_simulate_invalid_config(tmp_path, capsys):
    cfg = _config(tmp_path, reps=0, alphas=[2.0], colour="blue", kind="bogus")
    assert run(["simulate", cfg])[0] == EXIT_CONFIG
    err = capsys.readouterr().err
    for word in ("reps", "alphas", "colour", "kind"):
        assert word in err
    (tmp_path / "broken.json").write_text("{not json")
    assert run(["simulate", str(tmp_path / "broken.json")])[0] == EXIT_CONFIG
    assert run(["simulate"])[0] == EXIT_CONFIG
    assert run(["simulate", cfg, "--preset", "table3"])[0] == EXIT_CONFIG


def test_simulate_preset_with_reps(tmp_path):
    code, text = run(["--output", "csv", "simulate", "--preset", "table4", "--reps", "100",
                      "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "table4.csv").exists()
    assert "# experiment: ratio" in text

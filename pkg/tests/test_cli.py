import json
import subprocess
import sys

import numpy as np
import pytest

from ustatgl.cli import main
from ustatgl.csvio import read_values


def write(path, text):
    path.write_text(text)
    return str(path)


def run_cli(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_examples(tmp_path, capsys):
    a = write(tmp_path / "a.csv", "1\n2\n3\n")
    b = write(tmp_path / "b.csv", "value\n0\n1\n3\n")
    assert run_cli(capsys, "estimate", "--input", a, "--kernel", "variance", "--stat", "u-stat")[:2] == (0, "1.0\n")
    assert run_cli(capsys, "estimate", "--input", b, "--kernel", "qn", "--stat", "u-quantile", "--p", "0.25")[1] == "1.0\n"
    assert run_cli(capsys, "estimate", "--input", b, "--kernel", "qn", "--stat", "u-dist", "--t", "-1")[1] == "0.0\n"


def test_estimate_gl_spec_and_json(tmp_path, capsys):
    data = write(tmp_path / "d.csv", "0\n1\n3\n")
    spec = {"kernel": "winsorized-variance", "interval": [0, 0.75],
            "J": {"type": "constant", "params": {"value": 1, "a": 0, "b": 0.75}}, "atoms": [[0.75, 0.25]]}
    sp = write(tmp_path / "s.json", json.dumps(spec))
    code, out, _ = run_cli(capsys, "estimate", "--input", data, "--stat", "gl", "--spec", sp, "--format", "json")
    assert code == 0
    assert json.loads(out)["estimate"] == pytest.approx(7 / 3, abs=1e-15)


def test_estimate_with_longrun_interval(tmp_path, capsys):
    x = np.random.default_rng(0).random(2000)
    data = write(tmp_path / "u.csv", "".join(f"{float(v)!r}\n" for v in x))
    for extra in (["--stat", "u-quantile", "--p", "0.25", "--kernel", "qn"],
                  ["--stat", "u-stat", "--kernel", "variance"],
                  ["--stat", "u-dist", "--t", "0.3", "--kernel", "qn"],
                  ["--stat", "gl", "--kernel", "cdf-average", "--spec",
                   '{"interval": [0.25, 0.75], "atoms": [[0.25, -1], [0.75, 1]]}']):
        code, out, _ = run_cli(capsys, "estimate", "--input", data, "--ci", "longrun", "--format", "json", *extra)
        assert code == 0
        d = json.loads(out)
        assert d["ci"][0] < d["estimate"] < d["ci"][1]
        assert d["bandwidth"] == 13
    d = json.loads(run_cli(capsys, "estimate", "--input", data, "--ci", "longrun", "--format", "json",
                           "--stat", "gl", "--kernel", "cdf-average", "--spec",
                           '{"interval": [0.25, 0.75], "atoms": [[0.25, -1], [0.75, 1]]}')[1])
    assert d["sigma2"] == pytest.approx(0.25, rel=0.3)


def test_estimate_errors(tmp_path, capsys):
    bad = write(tmp_path / "bad.csv", "1\n2\noops\n")
    good = write(tmp_path / "g.csv", "1\n2\n3\n")
    code, out, err = run_cli(capsys, "estimate", "--input", bad, "--kernel", "qn", "--stat", "u-dist", "--t", "1")
    assert code == 1 and "line 3" in err and out == ""
    code, _, err = run_cli(capsys, "estimate", "--input", good, "--kernel", "qn", "--stat", "u-stat")
    assert code == 1 and "u-quantile" in err
    code, _, err = run_cli(capsys, "estimate", "--input", good, "--kernel", "qn", "--stat", "u-quantile")
    assert code == 1 and "--p" in err
    code, _, err = run_cli(capsys, "estimate", "--input", str(tmp_path / "none.csv"), "--kernel", "qn",
                           "--stat", "u-quantile", "--p", "0.5")
    assert code == 1 and "no such" in err


def test_simulate_is_deterministic(tmp_path, capsys):
    model = '{"id": "ar1", "params": {"phi": 0.0}}'
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(capsys, "simulate", "--model", model, "--n", "5000", "--seed", "7", "--out", str(a))[0] == 0
    assert run_cli(capsys, "simulate", "--model", model, "--n", "5000", "--seed", "7", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    x = read_values(a)
    x = x - x.mean()
    assert abs(np.dot(x[:-1], x[1:]) / np.dot(x, x)) < 0.05
    code, _, err = run_cli(capsys, "simulate", "--model", model, "--n", "0", "--seed", "7")
    assert code == 1 and "positive" in err


def test_simulate_seed_in_document_and_stdout(tmp_path, capsys):
    doc = write(tmp_path / "m.json", '{"id": "doubling_map", "params": {}, "seed": 3}')
    code, out, _ = run_cli(capsys, "simulate", "--model", doc, "--n", "4")
    assert code == 0 and len(out.splitlines()) == 4


def test_simulate_estimate_pipeline_is_lossless(tmp_path, capsys):
    out = tmp_path / "x.csv"
    run_cli(capsys, "simulate", "--model", '{"id": "garch11", "params": {}}', "--n", "300", "--seed", "1",
            "--out", str(out))
    from ustatgl.dependence import Seed, generate, sequence_model
    from ustatgl.uquantile import qn_select
    from ustatgl.kernels import builtin_kernel
    x = generate(sequence_model("garch11"), 300, Seed(1))
    assert read_values(out).tobytes() == x.tobytes()
    code, text, _ = run_cli(capsys, "estimate", "--input", str(out), "--kernel", "qn", "--stat", "u-quantile",
                            "--p", "0.25")
    assert float(text) == qn_select(x, builtin_kernel("qn"), 0.25)


def small_config(tmp_path, **kw):
    cfg = {"schema_version": 1, "name": "small", "model": {"id": "iid_uniform", "params": {}},
           "kernel": "cdf-average", "target": "gl_statistic", "params": {"gl_spec": "iqr"},
           "n_list": [400], "replications": 300, "base_seed": 5,
           "checks": [{"kind": "scaled_variance", "reference": "theory", "rel_tol": 0.3}]}
    cfg.update(kw)
    return write(tmp_path / "cfg.json", json.dumps(cfg))


def test_experiment_exit_codes(tmp_path, capsys):
    cfg = small_config(tmp_path)
    code, out, err = run_cli(capsys, "experiment", "--config", cfg, "--out", str(tmp_path / "res"))
    assert code == 0 and "[PASS]" in err
    where = out.strip()
    assert (tmp_path / "res").exists() and where.startswith(str(tmp_path / "res"))
    code, _, err = run_cli(capsys, "experiment", "--config", cfg, "--out", str(tmp_path / "res"))
    assert code == 1 and "--force" in err
    assert run_cli(capsys, "experiment", "--config", cfg, "--out", str(tmp_path / "res"), "--force")[0] == 0
    code, out, _ = run_cli(capsys, "report", "--dir", where)
    assert code == 0 and out.startswith("n,")
    code, out, _ = run_cli(capsys, "report", "--dir", where, "--format", "json")
    assert json.loads(out)["passed"] is True

    failing = small_config(tmp_path, checks=[{"kind": "scaled_variance", "reference": 1.0, "rel_tol": 0.01}])
    code, _, err = run_cli(capsys, "experiment", "--config", failing, "--out", str(tmp_path / "res2"))
    assert code == 2 and "[FAIL]" in err

    zero = small_config(tmp_path, replications=0)
    code, _, err = run_cli(capsys, "experiment", "--config", zero, "--out", str(tmp_path / "res3"))
    assert code == 1 and "replications" in err


def test_console_script_entry_point(tmp_path):
    data = write(tmp_path / "a.csv", "1\n2\n3\n")
    res = subprocess.run([sys.executable, "-m", "ustatgl.cli", "estimate", "--input", data, "--kernel",
                          "variance", "--stat", "u-stat"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "1.0\n"
    res = subprocess.run([sys.executable, "-m", "ustatgl.cli", "bogus"], capture_output=True, text=True)
    assert res.returncode == 1 and res.stdout == "" and "invalid choice" in res.stderr

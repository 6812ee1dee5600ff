import json

import numpy as np
import pytest

from ustatgl.experiments import (ExperimentConfig, ExperimentError, fast_u_statistic, lil_envelope,
                                 load_builtin_config, process_cov_check, run, theory, write_report)
from ustatgl.kernels import builtin_kernel
from ustatgl.uprocess import u_statistic

from oracles import uniform_qn_gamma

BASE = dict(name="t", model={"id": "iid_uniform", "params": {}}, kernel="qn",
            target="u_quantile_at_p", params={"p": 0.25}, n_list=[200], replications=40,
            base_seed=1, checks=[])


def cfg(**kw):
    d = dict(BASE)
    d.update(kw)
    return ExperimentConfig.from_dict(d)


@pytest.mark.parametrize("bad", [dict(replications=0), dict(n_list=[200, 100]), dict(n_list=[]),
                                 dict(target="median"), dict(base_seed=-3), dict(kernel="nope"),
                                 dict(model={"id": "ar1", "params": {"phi": 2}}),
                                 dict(checks=[{"kind": "vibes"}]), dict(schema_version=2)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        cfg(**bad)


def test_config_unknown_and_missing_fields():
    with pytest.raises(ValueError, match="unknown"):
        ExperimentConfig.from_dict({**BASE, "colour": 1})
    d = dict(BASE)
    del d["kernel"]
    with pytest.raises(ValueError, match="missing"):
        ExperimentConfig.from_dict(d)


def test_hash_ignores_jobs():
    assert cfg(jobs=1).hash == cfg(jobs=4).hash
    assert cfg().hash != cfg(base_seed=2).hash


def test_fast_u_statistic(rng):
    for name in ("variance", "gini"):
        x = rng.normal(size=300)
        assert fast_u_statistic(x, name) == pytest.approx(u_statistic(x, builtin_kernel(name).g), rel=1e-12)
    with pytest.raises(ValueError):
        fast_u_statistic(rng.normal(size=5), "qn")


def test_theory_values():
    tp = 1 - np.sqrt(0.75)
    th = theory(cfg())
    assert th["variance"] == pytest.approx(uniform_qn_gamma(tp) / (2 * np.sqrt(0.75)) ** 2, rel=1e-9)
    assert th["centre"] == pytest.approx(tp)
    th = theory(cfg(kernel="cdf-average", target="gl_statistic", params={"gl_spec": "iqr"}))
    assert th["variance"] == pytest.approx(0.25) and th["centre"] == pytest.approx(0.5)
    th = theory(cfg(kernel="variance", target="u_statistic", params={}))
    assert th["variance"] == pytest.approx(1 / 180, rel=1e-9) and th["centre"] == pytest.approx(1 / 12)
    th = theory(cfg(target="process_cov", params={"t_grid": [0.5], "s_grid": [0.5, 1.0]}))
    g = uniform_qn_gamma(0.5)
    assert np.allclose(th["covariance"], [[0.5 * g, 0.5 * g], [0.5 * g, g]], rtol=1e-9)
    with pytest.raises(ValueError):
        theory(cfg(model={"id": "ar1", "params": {}}))


def test_run_is_deterministic_and_jobs_invariant(tmp_path):
    c = cfg(n_list=[100, 200], replications=12,
            checks=[{"kind": "scaled_variance", "reference": "theory", "rel_tol": 0.5}])
    a = run(c, jobs=1)
    b = run(c, jobs=3)
    assert a.to_json() == b.to_json()
    pa = write_report(a, tmp_path / "a")
    pb = write_report(b, tmp_path / "b")
    for f in ("report.json", "summary.csv", "replications.csv"):
        assert (pa / f).read_bytes() == (pb / f).read_bytes()
    assert (pa / "timing.json").exists()
    with pytest.raises(FileExistsError):
        write_report(a, tmp_path / "a")
    write_report(a, tmp_path / "a", force=True)


def test_report_contents():
    c = cfg(checks=[{"kind": "scaled_variance", "reference": 0.0017, "rel_tol": 0.5},
                    {"kind": "mean_zero", "n_se": 4}])
    rep = run(c)
    d = json.loads(rep.to_json())
    assert d["schema_version"] == 1
    assert d["provenance"]["config_hash"] == c.hash
    assert len(d["statistics"]["200"]) == 40
    s = d["summaries"]["per_n"]["200"]
    assert {"mean", "variance", "scaled_variance", "se_scaled_variance", "median", "q05", "q95"} <= set(s)
    assert all("MC se" in line or "se" in line for line in rep.check_lines())


def test_replication_seeds_are_distinct():
    rep = run(cfg(replications=30))
    vals = np.array(rep.statistics["200"])[:, 0]
    assert np.unique(vals).size > 25


def test_failing_replication_reports_seed():
    c = cfg(model={"id": "ar1", "params": {"phi": 0.5}}, target="bahadur_sup", params={})
    with pytest.raises(ExperimentError, match="seed base=1, stream=0"):
        run(c)


def test_loglog_slope_and_checks():
    c = cfg(target="bahadur_sup", kernel="cdf-average", params={"m": 50}, n_list=[100, 400, 1600],
            replications=30, checks=[{"kind": "loglog_slope", "range": [-1.0, -0.4]}])
    rep = run(c)
    slope = rep.summaries["slope"]
    assert -1.0 < slope["slope"] < -0.4 and slope["se_slope"] > 0
    assert rep.passed


def test_process_cov_section():
    c = cfg(target="process_cov", params={"t_grid": [0.5], "s_grid": [0.5, 1.0]}, n_list=[300],
            replications=300, checks=[{"kind": "process_covariance", "rel_tol": 0.5},
                                      {"kind": "independent_increments", "n_se": 4}])
    out = process_cov_check(c)
    assert len(out["checks"]) == 2
    per = out["per_n"]["300"]
    assert len(per["covariance"]) == 2 and len(per["increments"]) == 1
    with pytest.raises(ValueError):
        process_cov_check(cfg())


def test_lil_degenerate_spec_gives_zero_exceedance():
    spec = {"kernel": "cdf-average", "interval": [0.2, 0.8], "J": {"type": "zero"}, "atoms": []}
    c = cfg(kernel="cdf-average", target="lil_envelope",
            params={"gl_spec": spec, "n_min": 100, "n_checkpoints": 5, "sigma2": 0.0},
            n_list=[2000], replications=5, checks=[{"kind": "exceedance_rate", "max": 0.1}])
    per = lil_envelope(c)["2000"]
    assert per["exceedance_rate"] == [0.0] * len(per["checkpoints"])
    assert run(c).passed


def test_lil_checkpoints_geometric():
    c = cfg(kernel="variance", target="lil_envelope",
            params={"statistic": "u_statistic", "n_min": 1000, "n_checkpoints": 3},
            n_list=[100_000], replications=3, checks=[])
    per = lil_envelope(c)["100000"]
    assert per["checkpoints"] == [1000, 10000, 100000]
    assert per["label"] == "finite-n consistency check"


@pytest.mark.parametrize("name", ["qn_clt", "iqr_clt", "bahadur_rate", "process_cov", "lil_iqr", "lil_variance"])
def test_builtin_configs_load(name):
    c = load_builtin_config(name)
    assert c.checks and c.replications >= 200

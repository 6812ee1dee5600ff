"""
Declarative Monte Carlo studies of the limit theory.

A study is a JSON document::

    {
      "schema_version": 1,
      "name": "qn-clt",
      "model": {"id": "iid_uniform", "params": {}},
      "kernel": "qn",
      "target": "u_quantile_at_p",
      "params": {"p": 0.25},
      "n_list": [2000],
      "replications": 5000,
      "base_seed": 20240101,
      "checks": [{"kind": "scaled_variance", "reference": "theory", "rel_tol": 0.10}]
    }

Replication r at the i-th sample size draws from
``Seed(base_seed, i * replications + r)``; statistics are gathered in
replication order, so reports do not depend on how work is scheduled.
Reports carry no timing information; wall-clock goes to a side file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import integrate

from . import __version__
from .dependence import Seed, generate, model_from_dict
from .glstat import GLSpec, gl_functional, gl_sigma2, gl_statistic, named_gl_spec
from .kernels import analytic_model, builtin_kernel, iid_gamma
from .uprocess import streaming_u_dist, u_process_path
from .uquantile import bahadur_grid, bahadur_remainder, fast_u_quantile

__all__ = [
    "TARGETS",
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentReport",
    "fast_u_statistic",
    "theory",
    "run",
    "lil_envelope",
    "process_cov_check",
    "write_report",
    "load_builtin_config",
]

SCHEMA_VERSION = 1

TARGETS = ("u_statistic", "u_dist_at_t", "u_quantile_at_p", "gl_statistic",
           "bahadur_sup", "lil_envelope", "process_cov")

CHECK_KINDS = ("scaled_variance", "loglog_slope", "process_covariance",
               "independent_increments", "exceedance_rate", "mean_zero")


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    model: dict
    kernel: str
    target: str
    n_list: list
    replications: int
    base_seed: int
    params: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    jobs: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; choose from {TARGETS}")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ValueError(f"replications must be a positive integer, got {self.replications!r}")
        if not self.n_list or any(int(n) != n or n < 2 for n in self.n_list):
            raise ValueError("n_list must be a non-empty list of integers >= 2")
        self.n_list = [int(n) for n in self.n_list]
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if int(self.jobs) < 1:
            raise ValueError("jobs must be >= 1")
        for c in self.checks:
            if c.get("kind") not in CHECK_KINDS:
                raise ValueError(f"unknown check kind {c.get('kind')!r}")
        model_from_dict(self.model)
        builtin_kernel(self.kernel)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"name", "model", "kernel", "target", "n_list", "replications", "base_seed",
                 "params", "checks", "jobs", "schema_version"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        missing = {"model", "kernel", "target", "n_list", "replications", "base_seed"} - set(d)
        if missing:
            raise ValueError(f"missing config fields: {sorted(missing)}")
        return cls(name=d.get("name", d["target"]), **{k: v for k, v in d.items() if k != "name"})

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        """Canonical form; ``jobs`` is a scheduling hint and is left out."""
        return {"schema_version": self.schema_version, "name": self.name, "model": self.model,
                "kernel": self.kernel, "target": self.target, "params": self.params,
                "n_list": self.n_list, "replications": self.replications,
                "base_seed": int(self.base_seed), "checks": self.checks}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    statistics: dict
    summaries: dict
    checks: list
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "provenance": {
                "config_hash": self.config.hash,
                "code_version": __version__,
                "seeds": {"base": int(self.config.base_seed),
                          "stream_rule": "Seed(base, n_index * replications + replication)"},
            },
            "summaries": self.summaries,
            "checks": self.checks,
            "passed": self.passed,
            "statistics": self.statistics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=True)

    def check_lines(self) -> list:
        out = []
        for c in self.checks:
            status = "PASS" if c["passed"] else "FAIL"
            out.append(f"[{status}] {self.config.name}: {c['description']}")
        return out


# ---------------------------------------------------------------------------
# statistics per replication


def fast_u_statistic(x: np.ndarray, kernel_id: str) -> float:
    """O(n log n) U-statistics for the variance and Gini kernels."""
    n = x.size
    if kernel_id == "variance":
        return float(np.var(x, ddof=1))
    if kernel_id == "gini":
        xs = np.sort(x)
        coef = 2.0 * np.arange(1, n + 1) - n - 1
        return float(2.0 * np.dot(coef, xs) / (n * (n - 1)))
    raise ValueError(f"no closed-form U-statistic for kernel {kernel_id!r}")


def _gl_spec(params: dict) -> GLSpec:
    return named_gl_spec(params.get("gl_spec", "iqr"))


def _checkpoints(params: dict, n_max: int) -> np.ndarray:
    if "checkpoints" in params:
        pts = np.asarray(params["checkpoints"], dtype=int)
    else:
        lo = int(params.get("n_min", 1000))
        count = int(params.get("n_checkpoints", 21))
        pts = np.unique(np.round(np.geomspace(lo, n_max, count)).astype(int))
    if pts[-1] != n_max:
        raise ValueError("the last checkpoint must equal the path length")
    return pts


@dataclass
class _Context:
    cfg: dict
    model: object
    kernel: object
    analytic: Optional[object]
    spec: Optional[GLSpec]
    centre: float


@lru_cache(maxsize=8)
def _context(cfg_json: str) -> _Context:
    cfg = json.loads(cfg_json)
    model = model_from_dict(cfg["model"])
    kernel = builtin_kernel(cfg["kernel"])
    try:
        analytic = analytic_model(model.id, kernel.id)
    except ValueError:
        analytic = None
    params = cfg.get("params", {})
    spec = None
    centre = 0.0
    target = cfg["target"]
    if target == "gl_statistic" or (target == "lil_envelope" and params.get("statistic", "gl") == "gl"):
        spec = _gl_spec(params)
        if analytic is not None:
            centre = gl_functional(analytic, spec)[0]
        elif "centre" in params:
            centre = float(params["centre"])
    elif target == "lil_envelope":
        if "centre" in params:
            centre = float(params["centre"])
        elif model.id == "iid_uniform":
            centre = _uniform_ustat_moments(kernel.id)[0]
    return _Context(cfg, model, kernel, analytic, spec, centre)


def _replicate(ctx: _Context, n: int, seed: Seed) -> np.ndarray:
    target = ctx.cfg["target"]
    params = ctx.cfg.get("params", {})
    x = generate(ctx.model, n, seed)
    if target == "u_statistic":
        return np.array([fast_u_statistic(x, ctx.kernel.id)])
    if target == "u_dist_at_t":
        return np.array([streaming_u_dist(x, ctx.kernel, float(params["t"]))])
    if target == "u_quantile_at_p":
        return np.array([fast_u_quantile(x, ctx.kernel, float(params["p"]))])
    if target == "gl_statistic":
        return np.array([gl_statistic(x, ctx.kernel, ctx.spec)])
    if target == "bahadur_sup":
        if ctx.analytic is None:
            raise ExperimentError("bahadur_sup needs an analytic model for t_p and u")
        grid = bahadur_grid(tuple(params.get("interval", (0.2, 0.8))), int(params.get("m", 200)))
        diag = bahadur_remainder(x, ctx.kernel, ctx.analytic, grid,
                                 method=params.get("method", "sort"))
        return np.array([diag.sup])
    if target == "process_cov":
        if ctx.analytic is None:
            raise ExperimentError("process_cov needs an analytic model for U")
        M = u_process_path(x, ctx.kernel, ctx.analytic, params["t_grid"], params["s_grid"])
        return M.ravel()
    if target == "lil_envelope":
        pts = _checkpoints(params, n)
        out = np.empty(pts.size)
        for k, m in enumerate(pts):
            prefix = x[:m]
            if ctx.spec is not None:
                val = gl_statistic(prefix, ctx.kernel, ctx.spec)
            else:
                val = fast_u_statistic(prefix, ctx.kernel.id)
            out[k] = math.sqrt(m) * (val - ctx.centre)
        return out
    raise ExperimentError(f"unknown target {target!r}")


def _run_block(cfg_json: str, n_index: int, start: int, stop: int) -> list:
    ctx = _context(cfg_json)
    cfg = ctx.cfg
    n = cfg["n_list"][n_index]
    reps = cfg["replications"]
    out = []
    for r in range(start, stop):
        seed = Seed(int(cfg["base_seed"]), n_index * reps + r)
        try:
            out.append(_replicate(ctx, n, seed))
        except Exception as exc:  # noqa: BLE001 - re-raised with the seed attached
            raise ExperimentError(
                f"replication {r} at n={n} failed (seed base={seed.base}, stream={seed.stream}): {exc}"
            ) from exc
    return out


# ---------------------------------------------------------------------------
# theory


@lru_cache(maxsize=8)
def _uniform_ustat_moments(kernel_id: str) -> tuple:
    # (theta, Gamma) for a fixed kernel g under i.i.d. Uniform[0, 1] by quadrature
    g = builtin_kernel(kernel_id).g
    if g is None:
        raise ValueError(f"kernel {kernel_id!r} has no fixed U-statistic form")

    def g1(x):
        return integrate.quad(lambda y: float(g(x, y)), 0.0, 1.0, points=[x], epsabs=1e-13)[0]

    theta = integrate.quad(g1, 0.0, 1.0, epsabs=1e-13)[0]
    second = integrate.quad(lambda x: (g1(x) - theta) ** 2, 0.0, 1.0, epsabs=1e-14)[0]
    return theta, 4.0 * second


def theory(config: ExperimentConfig) -> dict:
    """
    Analytic reference values for i.i.d. designs with a known model.

    Returns a dict with ``variance`` (asymptotic variance of the scaled
    statistic), ``centre`` and, for process targets, ``covariance``.
    Raises ``ValueError`` when no analytic model exists.
    """
    model = model_from_dict(config.model)
    kernel = builtin_kernel(config.kernel)
    p = config.params
    t = config.target
    if model.id != "iid_uniform":
        raise ValueError(f"no analytic reference for model {model.id!r}; give a numeric reference")
    if t == "u_statistic" or (t == "lil_envelope" and p.get("statistic") == "u_statistic"):
        theta, gam = _uniform_ustat_moments(kernel.id)
        return {"centre": theta, "variance": gam}
    am = analytic_model(model.id, kernel.id)
    gamma = iid_gamma(am)
    if t == "u_dist_at_t":
        tt = float(p["t"])
        return {"centre": float(am.U(tt)), "variance": gamma(tt, tt)}
    if t == "u_quantile_at_p":
        tp = float(am.quantile(float(p["p"])))
        return {"centre": tp, "variance": gamma(tp, tp) / float(am.u(tp)) ** 2}
    if t in ("gl_statistic", "lil_envelope"):
        spec = _gl_spec(p)
        var = gl_sigma2(kernel, am, spec, gamma)
        return {"centre": gl_functional(am, spec)[0], "variance": var.sigma2,
                "quadrature_error": var.quadrature_error}
    if t == "process_cov":
        tg = np.asarray(p["t_grid"], dtype=float)
        sg = np.asarray(p["s_grid"], dtype=float)
        S, T = np.meshgrid(sg, tg, indexing="ij")
        s, tt = S.ravel(), T.ravel()
        cov = np.minimum.outer(s, s) * gamma(tt[:, None], tt[None, :])
        return {"covariance": cov}
    raise ValueError(f"no analytic reference for target {t!r}")


# ---------------------------------------------------------------------------
# summaries and checks


def _scalar_summary(vals: np.ndarray, n: int) -> dict:
    r = vals.size
    mean = float(np.mean(vals))
    var = float(np.var(vals, ddof=1)) if r > 1 else 0.0
    dev2 = (vals - mean) ** 2
    se_var = float(np.std(dev2, ddof=1) / math.sqrt(r)) if r > 1 else float("nan")
    q = np.quantile(vals, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"n": n, "replications": r, "mean": mean, "se_mean": math.sqrt(var / r),
            "variance": var, "scaled_variance": n * var, "se_scaled_variance": n * se_var,
            "median": float(q[2]), "q05": float(q[0]), "q25": float(q[1]),
            "q75": float(q[3]), "q95": float(q[4])}


def _loglog_slope(ns, ys) -> dict:
    lx = np.log(np.asarray(ns, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    X = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    dof = max(lx.size - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return {"slope": float(coef[1]), "intercept": float(coef[0]), "se_slope": math.sqrt(cov[1, 1])}


def _process_summary(stats: np.ndarray, cfg: ExperimentConfig) -> dict:
    p = cfg.params
    sg, tg = list(p["s_grid"]), list(p["t_grid"])
    cov = np.cov(stats, rowvar=False, ddof=1)
    out = {"s_grid": sg, "t_grid": tg, "covariance": cov.tolist(),
           "labels": [[s, t] for s in sg for t in tg]}
    # increments over disjoint s-intervals: Z(t, s_1) vs Z(t', s_k) - Z(t', s_{k-1})
    R = stats.shape[0]
    Z = stats.reshape(R, len(sg), len(tg))
    incs = []
    for k in range(1, len(sg)):
        for a in range(len(tg)):
            for b in range(len(tg)):
                first = Z[:, k - 1, a]
                later = Z[:, k, b] - Z[:, k - 1, b]
                prod = (first - first.mean()) * (later - later.mean())
                incs.append({"s_first": sg[k - 1], "s_increment": [sg[k - 1], sg[k]],
                             "t": tg[a], "t2": tg[b], "covariance": float(np.sum(prod) / (R - 1)),
                             "se": float(np.std(prod, ddof=1) / math.sqrt(R))})
    out["increments"] = incs
    return out


def _lil_summary(stats: np.ndarray, cfg: ExperimentConfig, sigma2: Optional[float]) -> dict:
    pts = _checkpoints(cfg.params, cfg.n_list[-1])
    eps = float(cfg.params.get("epsilon", 0.1))
    out = {"checkpoints": pts.tolist(), "epsilon": eps, "label": "finite-n consistency check"}
    if sigma2 is None:
        return out
    sigma = math.sqrt(max(sigma2, 0.0))
    env = (1.0 + eps) * sigma * np.sqrt(2.0 * np.log(np.log(pts.astype(float))))
    exceed = np.abs(stats) > env
    out.update({"sigma2": sigma2, "envelope": env.tolist(),
                "exceedance_rate": exceed.mean(axis=0).tolist(),
                "path_fraction_exceeding": exceed.mean(axis=1).tolist()})
    return out


def _reference(check: dict, th: Optional[dict], key: str = "variance"):
    ref = check.get("reference", "theory")
    if ref == "theory":
        if th is None:
            raise ExperimentError("check refers to theory but no analytic model is available")
        return th[key]
    return ref


def _evaluate_checks(cfg: ExperimentConfig, summaries: dict, th: Optional[dict]) -> list:
    results = []
    for check in cfg.checks:
        kind = check["kind"]
        if kind == "scaled_variance":
            ref = float(_reference(check, th))
            tol = float(check.get("rel_tol", 0.10))
            for n_key, s in summaries["per_n"].items():
                dev = abs(s["scaled_variance"] - ref) / ref
                results.append({
                    "kind": kind, "n": int(n_key), "value": s["scaled_variance"], "reference": ref,
                    "rel_deviation": dev, "tolerance": tol, "mc_se": s["se_scaled_variance"],
                    "passed": bool(dev <= tol),
                    "description": (f"n={n_key}: var(sqrt(n)*stat)={s['scaled_variance']:.5g} "
                                    f"vs {ref:.5g} (rel dev {dev:.3%}, tol {tol:.0%}, "
                                    f"MC se {s['se_scaled_variance']:.2g})")})
        elif kind == "mean_zero":
            k = float(check.get("n_se", 3.0))
            centre = float(_reference(check, th, "centre"))
            for n_key, s in summaries["per_n"].items():
                z = (s["mean"] - centre) / s["se_mean"] if s["se_mean"] > 0 else 0.0
                results.append({"kind": kind, "n": int(n_key), "value": s["mean"], "reference": centre,
                                "z": z, "tolerance": k, "passed": bool(abs(z) <= k),
                                "description": f"n={n_key}: mean {s['mean']:.5g} vs {centre:.5g} (z={z:.2f}, tol {k} se)"})
        elif kind == "loglog_slope":
            lo, hi = check.get("range", (-0.9, -0.5))
            stat = check.get("statistic", "median")
            ns = [int(k) for k in summaries["per_n"]]
            ys = [summaries["per_n"][str(n)][stat] for n in ns]
            fit = _loglog_slope(ns, ys)
            summaries["slope"] = fit
            results.append({"kind": kind, "value": fit["slope"], "se": fit["se_slope"],
                            "range": [lo, hi], "passed": bool(lo <= fit["slope"] <= hi),
                            "description": (f"log-log slope of {stat} = {fit['slope']:.4f} "
                                            f"(se {fit['se_slope']:.3f}), required in [{lo}, {hi}]")})
        elif kind == "process_covariance":
            tol = float(check.get("rel_tol", 0.15))
            ref = np.asarray(_reference(check, th, "covariance"), dtype=float)
            for n_key, s in summaries["per_n"].items():
                cov = np.asarray(s["covariance"])
                with np.errstate(divide="ignore", invalid="ignore"):
                    rel = np.abs(cov - ref) / np.abs(ref)
                worst = float(np.nanmax(rel))
                results.append({"kind": kind, "n": int(n_key), "max_rel_deviation": worst,
                                "reference": ref.tolist(), "tolerance": tol,
                                "passed": bool(worst <= tol),
                                "description": (f"n={n_key}: max relative deviation of process "
                                                f"covariance from min(s,s')Gamma(t,t') = {worst:.3%} "
                                                f"(tol {tol:.0%})")})
        elif kind == "independent_increments":
            k = float(check.get("n_se", 3.0))
            for n_key, s in summaries["per_n"].items():
                zs = [abs(i["covariance"]) / i["se"] for i in s["increments"]]
                worst = max(zs) if zs else 0.0
                results.append({"kind": kind, "n": int(n_key), "max_abs_z": worst, "tolerance": k,
                                "passed": bool(worst <= k),
                                "description": (f"n={n_key}: disjoint-increment covariances within "
                                                f"{worst:.2f} MC se of 0 (tol {k})")})
        elif kind == "exceedance_rate":
            mx = float(check.get("max", 0.10))
            for n_key, s in summaries["per_n"].items():
                if "exceedance_rate" not in s:
                    raise ExperimentError("exceedance check needs sigma^2 (theory or params.sigma2)")
                rate = s["exceedance_rate"][-1]
                results.append({"kind": kind, "n": s["checkpoints"][-1], "value": rate,
                                "tolerance": mx, "passed": bool(rate < mx) or (s["sigma2"] == 0 and rate == 0),
                                "description": (f"LIL envelope exceedance at n={s['checkpoints'][-1]}: "
                                                f"{rate:.3%} of paths (must be < {mx:.0%}); "
                                                "finite-n consistency check")})
    return results


# ---------------------------------------------------------------------------
# execution


def _collect(cfg: ExperimentConfig, jobs: int) -> dict:
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    reps = cfg.replications
    tasks = []
    for i in range(len(cfg.n_list)):
        step = max(1, math.ceil(reps / (4 * jobs))) if jobs > 1 else reps
        for start in range(0, reps, step):
            tasks.append((i, start, min(reps, start + step)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_block, cfg_json, *t) for t in tasks]
            blocks = [f.result() for f in futures]
    else:
        blocks = [_run_block(cfg_json, *t) for t in tasks]
    stats: dict = {i: [] for i in range(len(cfg.n_list))}
    for (i, _, _), block in zip(tasks, blocks):
        stats[i].extend(block)
    return {cfg.n_list[i]: np.vstack(v) for i, v in stats.items()}


def run(config: ExperimentConfig, jobs: Optional[int] = None) -> ExperimentReport:
    """Execute a study and evaluate its checks."""
    jobs = int(jobs or config.jobs or 1)
    t0 = time.perf_counter()
    raw = _collect(config, jobs)
    try:
        th = theory(config)
    except ValueError:
        th = None
    per_n = {}
    for n, arr in raw.items():
        if config.target == "process_cov":
            per_n[str(n)] = _process_summary(arr, config)
        elif config.target == "lil_envelope":
            sigma2 = config.params.get("sigma2", th["variance"] if th else None)
            per_n[str(n)] = _lil_summary(arr, config, None if sigma2 is None else float(sigma2))
        else:
            per_n[str(n)] = _scalar_summary(arr[:, 0], n)
    summaries = {"per_n": per_n}
    if th is not None:
        summaries["theory"] = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
                               for k, v in th.items()}
    checks = _evaluate_checks(config, summaries, th)
    statistics = {str(n): arr.tolist() for n, arr in raw.items()}
    return ExperimentReport(config, statistics, summaries, checks, time.perf_counter() - t0)


def lil_envelope(config: ExperimentConfig, jobs: Optional[int] = None) -> dict:
    """Run a ``lil_envelope`` study and return its per-n report section."""
    if config.target != "lil_envelope":
        raise ValueError("config target must be 'lil_envelope'")
    return run(config, jobs).summaries["per_n"]


def process_cov_check(config: ExperimentConfig, jobs: Optional[int] = None) -> dict:
    """Run a ``process_cov`` study and return its per-n report section with checks."""
    if config.target != "process_cov":
        raise ValueError("config target must be 'process_cov'")
    rep = run(config, jobs)
    return {"per_n": rep.summaries["per_n"], "checks": rep.checks}


def _summary_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    per_n = report.summaries["per_n"]
    rows = []
    for n_key, s in per_n.items():
        row = {"n": n_key}
        for k, v in s.items():
            if isinstance(v, (int, float)):
                row[k] = repr(float(v)) if isinstance(v, float) else v
        if "exceedance_rate" in s:
            for m, rate in zip(s["checkpoints"], s["exceedance_rate"]):
                rows.append({"n": n_key, "checkpoint": m, "exceedance_rate": repr(float(rate))})
            continue
        rows.append(row)
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _replications_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "replication", "index", "value"])
    for n_key, rows in report.statistics.items():
        for r, vals in enumerate(rows):
            for k, v in enumerate(vals):
                w.writerow([n_key, r, k, repr(float(v))])
    return buf.getvalue()


def write_report(report: ExperimentReport, out_dir, force: bool = False) -> Path:
    """
    Write ``report.json``, ``summary.csv`` and ``replications.csv`` under
    ``out_dir/<config hash prefix>``; ``timing.json`` holds the wall-clock.
    """
    target = Path(out_dir) / report.config.hash[:16]
    if target.exists() and any(target.iterdir()) and not force:
        raise FileExistsError(f"{target} already holds results; pass force=True to overwrite")
    target.mkdir(parents=True, exist_ok=True)
    (target / "report.json").write_text(report.to_json())
    (target / "summary.csv").write_text(_summary_csv(report))
    (target / "replications.csv").write_text(_replications_csv(report))
    (target / "timing.json").write_text(json.dumps({"wall_clock_seconds": report.wall_clock}))
    return target


def load_builtin_config(name: str) -> ExperimentConfig:
    """Load one of the configs shipped in ``ustatgl/configs``."""
    from importlib import resources
    text = resources.files("ustatgl").joinpath("configs", f"{name}.json").read_text()
    return ExperimentConfig.from_json(text)

"""
Command-line front end.

    ustatgl estimate --input data.csv --kernel qn --stat u-quantile --p 0.25
    ustatgl simulate --model '{"id": "ar1", "params": {"phi": 0.5}}' --n 1000 --seed 1
    ustatgl experiment --config study.json --out results --jobs 2
    ustatgl report --dir results/<hash>

Data goes to stdout, diagnostics to stderr.  ``experiment`` exits with 0
when every check passes, 2 when a check fails and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from scipy.stats import norm

from . import __version__
from .csvio import CSVFormatError, format_values, read_values
from .dependence import Seed, generate, model_from_dict
from .experiments import ExperimentConfig, ExperimentError, run, write_report
from .glstat import gl_sigma2, gl_statistic, named_gl_spec
from .kernels import builtin_kernel
from .longrun import (bandwidth_for, estimate_gamma, estimate_u, estimate_ustat_lrv,
                      gamma_provider, plugin_model)
from .uprocess import streaming_u_dist, u_statistic
from .uquantile import fast_u_quantile

EXIT_OK, EXIT_ERROR, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


def _bandwidth(text: str):
    return int(text) if text.isdigit() else text


def _load_json_arg(text: str) -> dict:
    """Inline JSON or a path to a JSON file."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return json.loads(stripped)
    path = Path(text)
    if not path.is_file():
        raise UsageError(f"no such file: {text}")
    return json.loads(path.read_text())


def _estimate(args) -> dict:
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"no such input file: {args.input}")
    spec = None
    if args.stat == "gl":
        if not args.spec:
            raise UsageError("--stat gl needs --spec")
        spec = named_gl_spec(args.spec if args.spec in ("iqr", "winsorized-variance")
                             else _load_json_arg(args.spec))
        kname = args.kernel or spec.kernel
        if kname is None:
            raise UsageError("give --kernel or a kernel in the GL spec")
        if spec.kernel and args.kernel and builtin_kernel(args.kernel).id != builtin_kernel(spec.kernel).id:
            raise UsageError(f"--kernel {args.kernel} conflicts with spec kernel {spec.kernel}")
    else:
        kname = args.kernel
        if kname is None:
            raise UsageError("--kernel is required")
    kernel = builtin_kernel(kname)
    x = read_values(path)
    n = x.size
    if n < 2:
        raise UsageError(f"need at least 2 observations, got {n}")
    out = {"stat": args.stat, "kernel": kernel.id, "n": n}

    sigma2 = None
    if args.stat == "u-stat":
        if kernel.g is None:
            raise UsageError(f"kernel {kernel.id!r} has no fixed U-statistic form; use u-dist or u-quantile")
        est = u_statistic(x, kernel.g)
        if args.ci == "longrun":
            sigma2 = estimate_ustat_lrv(x, kernel.g, _bandwidth(args.bandwidth))
    elif args.stat == "u-dist":
        if args.t is None:
            raise UsageError("--stat u-dist needs --t")
        est = streaming_u_dist(x, kernel, args.t)
        out["t"] = args.t
        if args.ci == "longrun":
            sigma2 = float(estimate_gamma(x, kernel, [args.t], bandwidth=_bandwidth(args.bandwidth)).matrix[0, 0])
    elif args.stat == "u-quantile":
        if args.p is None:
            raise UsageError("--stat u-quantile needs --p")
        if not 0.0 < args.p <= 1.0:
            raise UsageError(f"--p must lie in (0, 1], got {args.p}")
        est = fast_u_quantile(x, kernel, args.p)
        out["p"] = args.p
        if args.ci == "longrun":
            G = estimate_gamma(x, kernel, [est], bandwidth=_bandwidth(args.bandwidth)).matrix[0, 0]
            u = estimate_u(kernel, est, sample=x)
            sigma2 = float(G / u**2)
    else:
        est = gl_statistic(x, kernel, spec)
        out["spec"] = spec.to_dict()
        if args.ci == "longrun":
            model = plugin_model(x, kernel)
            gamma = gamma_provider(x, kernel, _bandwidth(args.bandwidth))
            sigma2 = gl_sigma2(kernel, model, spec, gamma).sigma2
    est = float(est)
    out["estimate"] = est
    if sigma2 is not None:
        z = float(norm.ppf(0.975))
        se = math.sqrt(max(sigma2, 0.0) / n)
        out.update({"sigma2": float(sigma2), "se": se, "ci": [est - z * se, est + z * se],
                    "bandwidth": bandwidth_for(n, _bandwidth(args.bandwidth))})
    return out


def cmd_estimate(args) -> int:
    out = _estimate(args)
    if args.format == "json":
        print(json.dumps(out))
    elif "ci" in out:
        print(f"{out['estimate']!r}\t{out['ci'][0]!r}\t{out['ci'][1]!r}")
    else:
        print(repr(out["estimate"]))
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load_json_arg(args.model)
    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        raise UsageError("give --seed or a 'seed' in the model document")
    model = model_from_dict(doc)
    x = generate(model, args.n, Seed(int(seed), int(args.stream)))
    text = format_values(x)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {x.size} values to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"no such config file: {args.config}")
    config = ExperimentConfig.from_json(path.read_text())
    target = Path(args.out) / config.hash[:16]
    if target.exists() and any(target.iterdir()) and not args.force:
        raise UsageError(f"{target} already holds results; use --force to overwrite")
    report = run(config, jobs=args.jobs)
    where = write_report(report, args.out, force=args.force)
    for line in report.check_lines():
        print(line, file=sys.stderr)
    print(where)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    d = Path(args.dir)
    rep_path = d / "report.json"
    if not rep_path.is_file():
        raise UsageError(f"no report.json in {d}")
    if args.format == "json":
        rep = json.loads(rep_path.read_text())
        print(json.dumps({"provenance": rep["provenance"], "checks": rep["checks"],
                          "passed": rep["passed"]}, indent=1))
    else:
        sys.stdout.write((d / "summary.csv").read_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ustatgl", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="point estimate (and interval) from a CSV sample")
    p.add_argument("--input", required=True, help="CSV file, one value per line")
    p.add_argument("--kernel", help="variance, gini, qn, cdf-average or winsorized-variance")
    p.add_argument("--stat", required=True, choices=["u-stat", "u-dist", "u-quantile", "gl"])
    p.add_argument("--t", type=float, help="argument of U_n for --stat u-dist")
    p.add_argument("--p", type=float, help="probability for --stat u-quantile")
    p.add_argument("--spec", help="iqr, winsorized-variance, a GL spec JSON file or inline JSON")
    p.add_argument("--ci", choices=["none", "longrun"], default="none")
    p.add_argument("--bandwidth", default="cube-root", help="cube-root, zero or an integer lag")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="write a simulated path as CSV")
    p.add_argument("--model", required=True, help="model JSON file or inline JSON {id, params, seed}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", help="output CSV (stdout when omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a Monte Carlo study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="results root; reports go to <out>/<config hash>")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--force", action="store_true", help="overwrite existing results")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="print a stored report")
    p.add_argument("--dir", required=True, help="a results directory written by 'experiment'")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors exit with 1; 2 is reserved for failed experiment checks
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, CSVFormatError, ValueError, FileExistsError, ExperimentError,
            json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark command line: run one solver, compare several, emit plots.

Configuration is a flat ``key = value`` text file (``#`` comments allowed);
every key has a command-line flag of the same name and the flag wins when
both are given.  Traces go to ``<outdir>/<method>.csv`` in the format
documented in :mod:`spqn.data`; ``compare`` adds a ``summary.csv``.

Exit codes: 0 converged, 2 iteration budget exhausted, 3 diverged,
1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
import time

import numpy as np

from . import data, problems, solver

DEFAULT_OUTDIR_ENV = "SPQN_OUTDIR"

STATUS_EXIT = {solver.CONVERGED: 0, solver.MAX_ITERS: 2, solver.DIVERGED: 3}

# key -> (type, default).  Config file keys and CLI flags share these names.
SETTINGS = {
    "problem": (str, "quadratic"),
    "dataset": (str, None),
    "protected_col": (int, None),
    "scale_features": (bool, False),
    "method": (str, "mgsr1"),
    "alpha": (float, None),
    "n": (int, 20),
    "M": (float, None),
    "max_iters": (int, 500),
    "tol": (float, 1e-8),
    "seed": (int, 0),
    "outdir": (str, None),
    "eta_tracking": (bool, False),
    "timing": (bool, False),
    "n_sweep": (str, None),
    "jobs": (int, 1),
    "dx": (int, 10),
    "dy": (int, 10),
    "mu": (float, 1.0),
    "L1": (float, 10.0),
    "m": (int, None),
    "d": (int, None),
    "p": (float, 0.5),
    "separation": (float, 1.0),
    "lambda_reg": (float, problems.DEFAULT_LAMBDA_REG),
    "gamma": (float, problems.DEFAULT_GAMMA),
    "beta_reg": (float, problems.DEFAULT_BETA_REG),
}

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


class UsageError(Exception):
    """Bad flags or configuration; reported on stderr with exit code 1."""


def _convert(key: str, text: str):
    kind, _ = SETTINGS[key]
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE_WORDS:
                return True
            if low in _FALSE_WORDS:
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise UsageError(f"bad value {text!r} for key {key!r}") from None


def parse_config_file(path: str) -> dict:
    """Read a flat key = value file; unknown keys are errors."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for line_no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise UsageError(f"{path}:{line_no}: expected key = value, got {raw!r}")
        key, _, value = text.partition("=")
        key = key.strip()
        if key not in SETTINGS:
            raise UsageError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return values


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file values, then command-line flags."""
    settings = {key: default for key, (_, default) in SETTINGS.items()}
    if getattr(args, "config", None):
        settings.update(parse_config_file(args.config))
    for key in SETTINGS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            settings[key] = flag_value
    if settings["outdir"] is None:
        settings["outdir"] = os.environ.get(DEFAULT_OUTDIR_ENV, "runs")
    return settings


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--problem", choices=("quadratic", "auc", "debias"))
    parser.add_argument("--dataset", help="LIBSVM file path")
    parser.add_argument("--protected-col", type=int,
                        help="feature column holding the protected attribute")
    parser.add_argument("--scale-features", action=argparse.BooleanOptionalAction,
                        default=None, help="min-max scale features to [0, 1]")
    parser.add_argument("--method",
                        help="solver method; comma-separated list for compare")
    parser.add_argument("--alpha", type=float, help="stepsize (default: 1 for "
                        "quasi-Newton methods, 1/L1 for extragradient)")
    parser.add_argument("--n", type=int, help="inner greedy updates per iteration")
    parser.add_argument("--M", type=float, help="drift correction coefficient override")
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--tol", type=float, help="stop when the gradient norm drops here")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--outdir", help=f"output directory (default ${DEFAULT_OUTDIR_ENV} or ./runs)")
    parser.add_argument("--eta-tracking", action=argparse.BooleanOptionalAction,
                        default=None, help="record the Q vs squared-Hessian ratio (slow)")
    parser.add_argument("--timing", action=argparse.BooleanOptionalAction,
                        default=None, help="measure per-step wall time (breaks "
                        "byte-identical reruns)")
    parser.add_argument("--n-sweep", help="comma-separated n values for compare")
    parser.add_argument("--jobs", type=int, help="concurrent runs in compare")
    parser.add_argument("--dx", type=int, help="quadratic: x dimension")
    parser.add_argument("--dy", type=int, help="quadratic: y dimension")
    parser.add_argument("--mu", type=float, help="quadratic: strong convexity target")
    parser.add_argument("--L1", type=float, help="quadratic: gradient Lipschitz target")
    parser.add_argument("--m", type=int, help="synthetic data: sample count")
    parser.add_argument("--d", type=int, help="synthetic data: feature count")
    parser.add_argument("--p", type=float, help="synthetic data: positive fraction")
    parser.add_argument("--separation", type=float, help="synthetic data: class mean gap")
    parser.add_argument("--lambda-reg", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--beta-reg", type=float)


def _load_dataset(settings: dict) -> data.Dataset:
    if settings["dataset"]:
        ds = data.load_libsvm(settings["dataset"])
        if settings["scale_features"]:
            ds = data.minmax_scale(ds)
        if settings["protected_col"] is not None:
            ds = data.extract_protected(ds, settings["protected_col"])
        return ds
    if settings["m"] is not None and settings["d"] is not None:
        protected_col = settings["protected_col"]
        if settings["problem"] == "debias" and protected_col is None:
            protected_col = 0
        ds = data.synth_binary(settings["seed"], settings["m"], settings["d"],
                               positive_fraction=settings["p"],
                               separation=settings["separation"],
                               protected_col=protected_col)
        if settings["scale_features"]:
            ds = data.minmax_scale(ds)
        return ds
    raise UsageError(
        f"problem {settings['problem']!r} needs data: set key 'dataset' "
        "(or 'm' and 'd' for synthetic data)")


def build_problem(settings: dict):
    kind = settings["problem"]
    if kind == "quadratic":
        return problems.quadratic_make(settings["seed"], settings["dx"],
                                       settings["dy"], settings["mu"],
                                       settings["L1"])
    ds = _load_dataset(settings)
    if kind == "auc":
        return problems.AucProblem(ds.features, ds.labels,
                                   lambda_reg=settings["lambda_reg"])
    if kind == "debias":
        if ds.protected is None:
            raise UsageError("debias problem needs a protected attribute: "
                             "set key 'protected_col'")
        return problems.DebiasProblem(ds.features, ds.labels, ds.protected,
                                      lambda_reg=settings["lambda_reg"],
                                      gamma=settings["gamma"],
                                      beta_reg=settings["beta_reg"])
    raise UsageError(f"unknown problem {kind!r}")


def initial_point(settings: dict, problem) -> np.ndarray:
    """Seeded random start for the quadratic (its saddle may sit at the
    origin); zero start for the data-driven problems."""
    if settings["problem"] == "quadratic":
        return np.random.default_rng(settings["seed"]).standard_normal(problem.dim)
    return np.zeros(problem.dim)


def _solver_config(settings: dict, method: str, n: int) -> solver.SolverConfig:
    try:
        return solver.SolverConfig(
            method=method, alpha=settings["alpha"], n=n, M=settings["M"],
            max_iters=settings["max_iters"], tol=settings["tol"],
            seed=settings["seed"], eta_tracking=settings["eta_tracking"],
            timing=settings["timing"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run_one(problem, cfg, z0):
    t0 = time.perf_counter()
    trace = solver.solve(problem, cfg, z0)
    wall_ms = (time.perf_counter() - t0) * 1e3
    return trace, wall_ms


def cmd_run(settings: dict) -> int:
    methods = settings["method"].split(",")
    if len(methods) != 1:
        raise UsageError("run takes exactly one method; use compare for several")
    method = methods[0].strip()
    problem = build_problem(settings)
    cfg = _solver_config(settings, method, settings["n"])
    z0 = initial_point(settings, problem)
    trace, wall_ms = _run_one(problem, cfg, z0)

    outdir = settings["outdir"]
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{method}.csv")
    data.write_trace_csv(trace, path)
    print(f"[run] method={method} problem={settings['problem']} "
          f"status={trace.status} iters={trace.iterations} "
          f"final_lambda={trace.final_grad_norm:.6e} wall_ms={wall_ms:.3f} "
          f"trace={path}")
    return STATUS_EXIT[trace.status]


def cmd_compare(settings: dict) -> int:
    methods = [m.strip() for m in settings["method"].split(",") if m.strip()]
    if len(methods) < 2:
        raise UsageError("compare needs at least two methods (key 'method', "
                         "comma-separated)")
    sweep = None
    if settings["n_sweep"]:
        try:
            sweep = [int(tok) for tok in str(settings["n_sweep"]).split(",")]
        except ValueError:
            raise UsageError(f"bad n_sweep value {settings['n_sweep']!r}") from None

    problem = build_problem(settings)
    z0 = initial_point(settings, problem)

    jobs = []
    for method in methods:
        if method == "extragradient" or not sweep:
            ns = [0 if method == "extragradient" else settings["n"]]
        else:
            ns = sweep
        for n in ns:
            name = f"{method}_n{n}" if len(ns) > 1 else method
            jobs.append((name, method, n))

    def execute(job):
        name, method, n = job
        cfg = _solver_config(settings, method, n)
        trace, wall_ms = _run_one(problem, cfg, z0)
        return name, method, n, trace, wall_ms

    workers = max(1, settings["jobs"])
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute, jobs))
    else:
        results = [execute(job) for job in jobs]

    outdir = settings["outdir"]
    os.makedirs(outdir, exist_ok=True)
    worst = 0
    with open(os.path.join(outdir, "summary.csv"), "w", encoding="utf-8",
              newline="") as handle:
        handle.write("method,n,final_lambda,iters,wall_ms\n")
        for name, method, n, trace, wall_ms in results:
            path = os.path.join(outdir, f"{name}.csv")
            data.write_trace_csv(trace, path)
            handle.write(f"{method},{n},{trace.final_grad_norm:.17g},"
                         f"{trace.iterations},{wall_ms:.3f}\n")
            print(f"[compare] method={method} n={n} status={trace.status} "
                  f"iters={trace.iterations} "
                  f"final_lambda={trace.final_grad_norm:.6e} trace={path}")
            worst = max(worst, STATUS_EXIT[trace.status])
    print(f"[compare] summary={os.path.join(outdir, 'summary.csv')}")
    return worst


def cmd_gnuplot(settings: dict) -> int:
    outdir = settings["outdir"]
    try:
        names = sorted(name for name in os.listdir(outdir)
                       if name.endswith(".csv") and name != "summary.csv")
    except OSError as exc:
        raise UsageError(f"cannot list output directory: {exc}") from exc
    if not names:
        raise UsageError(f"no trace CSVs found in {outdir!r}")
    path = os.path.join(outdir, "plot.gp")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("set datafile separator ','\n")
        handle.write("set logscale y\n")
        handle.write("set xlabel 'iteration'\n")
        handle.write("set ylabel 'gradient norm'\n")
        handle.write("set key top right\n")
        plots = ", ".join(
            f"'{name}' using 1:2 with lines title '{name[:-4]}'" for name in names)
        handle.write(f"plot {plots}\n")
    print(f"[gnuplot] script={path} (run: gnuplot -p {path})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spqn",
        description="Benchmark greedy SR1 quasi-Newton and first-order solvers "
                    "on saddle point problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("run", "run one method on one problem"),
                      ("compare", "run several methods (and n values) on one problem"),
                      ("gnuplot", "emit a gnuplot script for existing traces")):
        sub_parser = sub.add_parser(name, help=doc)
        _add_common_flags(sub_parser)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    try:
        settings = resolve_settings(args)
        if args.command == "run":
            return cmd_run(settings)
        if args.command == "compare":
            return cmd_compare(settings)
        return cmd_gnuplot(settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

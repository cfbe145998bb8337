"""Command-line interface.

Subcommands: gen-data, theory, run, sweep, verify, report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .core import ConfigError
from .estimators import (InfeasibleParameters, constants_for, vfr_theory,
                         vfrbs_theory)
from .harness import (ALGORITHMS, PROBLEM_PRESETS, ExperimentConfig,
                      build_problem, default_out_dir, load_config, report,
                      run_single, sweep)
from .problems import save_instance
from .verify import run_suites, suites_to_json


def _parse_seeds(text):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _add_problem_args(sp):
    sp.add_argument("--problem", required=True, choices=sorted(PROBLEM_PRESETS))
    sp.add_argument("--dataset", help="LIBSVM file for the logistic preset")
    sp.add_argument("--n", type=int, help="override component count")


def _problem_overrides(args):
    over = {}
    if getattr(args, "dataset", None):
        over["dataset"] = args.dataset
    if getattr(args, "n", None):
        over["n"] = args.n
    return over


def build_parser():
    ap = argparse.ArgumentParser(
        prog="vrsplit",
        description="Variance-reduced forward-reflected splitting experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("theory", help="print derived step-size constants as JSON")
    sp.add_argument("--method", choices=("vfr", "vfrbs"), default="vfr")
    sp.add_argument("--estimator", choices=("svrg", "saga", "full"), default="svrg")
    sp.add_argument("--gamma", type=float, default=0.75)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--b", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--L", type=float, default=1.0)
    sp.add_argument("--kappa", type=float, default=0.0)

    sp = sub.add_parser("run", help="run one (problem, algorithm, seed)")
    _add_problem_args(sp)
    sp.add_argument("--algorithm", required=True, choices=sorted(ALGORITHMS))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=float, default=100.0)
    sp.add_argument("--mode", choices=("comparison", "theory"), default="comparison")
    sp.add_argument("--out", default=None, help="output CSV path")

    sp = sub.add_parser("sweep", help="run the algorithm x seed cross product")
    sp.add_argument("--config", help="TOML experiment file")
    _add_problem_args_optional(sp)
    sp.add_argument("--algorithms", help="comma-separated labels")
    sp.add_argument("--seeds", default="0..9", help="e.g. 0..9 or 0,3,5")
    sp.add_argument("--epochs", type=float, default=100.0)
    sp.add_argument("--mode", choices=("comparison", "theory"), default="comparison")
    sp.add_argument("--out-dir", default=None)

    sp = sub.add_parser("verify", help="run the estimator/certificate suites")
    sp.add_argument("--states", type=int, default=10)

    sp = sub.add_parser("gen-data", help="write a problem instance container")
    _add_problem_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("report", help="summary table from a sweep directory")
    sp.add_argument("--dir", default=None)
    return ap


def _add_problem_args_optional(sp):
    sp.add_argument("--problem", choices=sorted(PROBLEM_PRESETS))
    sp.add_argument("--dataset")
    sp.add_argument("--n", type=int)


def cmd_theory(args):
    if args.estimator != "full" and args.b is None:
        print("error: --b is required for minibatch estimators", file=sys.stderr)
        return 2
    if args.estimator == "svrg" and args.p is None:
        print("error: --p is required for the svrg estimator", file=sys.stderr)
        return 2
    kind = {"svrg": "lsvrg", "saga": "saga", "full": "full"}[args.estimator]
    consts = constants_for(kind, args.gamma, args.n, batch_size=args.b,
                           snapshot_prob=args.p)
    fn = vfrbs_theory if args.method == "vfrbs" else vfr_theory
    try:
        theo = fn(args.gamma, consts, args.L, args.kappa)
    except InfeasibleParameters as exc:
        print(f"error: infeasible parameters: {exc} "
              f"(max admissible kappa {exc.max_kappa:.6g})", file=sys.stderr)
        return 2
    print(theo.to_json(indent=2))
    return 0


def cmd_run(args):
    cfg = ExperimentConfig(problem=args.problem, algorithms=[args.algorithm],
                           seeds=[args.seed], epochs=args.epochs, mode=args.mode,
                           problem_overrides=_problem_overrides(args))
    traj = run_single(cfg, args.algorithm, args.seed)
    out = args.out or f"{args.problem}__{args.algorithm}__seed{args.seed:03d}.csv"
    traj.write_csv(out)
    print(out)
    return 0


def cmd_sweep(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.problem or not args.algorithms:
            print("error: either --config or --problem/--algorithms",
                  file=sys.stderr)
            return 2
        cfg = ExperimentConfig(
            problem=args.problem,
            algorithms=[a for a in args.algorithms.split(",") if a],
            seeds=_parse_seeds(args.seeds),
            epochs=args.epochs,
            mode=args.mode,
            out_dir=args.out_dir or default_out_dir(),
            problem_overrides=_problem_overrides(args),
        )
    paths = sweep(cfg)
    for p in paths:
        print(p)
    return 0


def cmd_verify(args):
    rep = run_suites(states=args.states)
    print(suites_to_json(rep))
    return 0 if rep["pass"] else 1


def cmd_gen_data(args):
    problem = build_problem(args.problem, seed=args.seed,
                            **_problem_overrides(args))
    arrays = {"x0": problem.x0}
    if hasattr(problem.op, "mats"):
        arrays["mats"] = problem.op.mats
        arrays["offsets"] = problem.op.offsets
    if problem.x_star is not None:
        arrays["x_star"] = problem.x_star
    params = {k: v for k, v in problem.params.items()
              if isinstance(v, (int, float, str, bool))}
    params["L"] = problem.L
    save_instance(args.out, args.problem, args.seed, arrays, params)
    print(args.out)
    return 0


def cmd_report(args):
    out_dir = args.dir or default_out_dir()
    if not os.path.isdir(out_dir):
        print(f"error: no such directory {out_dir!r}", file=sys.stderr)
        return 2
    print(report(out_dir))
    return 0


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    np.seterr(over="ignore", invalid="ignore")
    handlers = {
        "theory": cmd_theory,
        "run": cmd_run,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
        "gen-data": cmd_gen_data,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

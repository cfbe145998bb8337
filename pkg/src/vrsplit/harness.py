"""Experiment orchestration: problem and algorithm presets, multi-seed
sweeps, curve aggregation, and result export.

Sweeps fix the iteration count per algorithm from the epoch budget and the
expected per-iteration oracle cost, so every seed records on the same
iteration grid and curves can be averaged pointwise (the realized epoch
column still reflects each seed's random snapshot refreshes).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .core import ConfigError, Trajectory, read_trajectory_csv
from .operators import averaged_lipschitz
from .problems import (co_hypomonotone_instance, gen_logistic_ambiguous,
                       gen_quadratic_minimax, gen_synthetic_classification,
                       gen_wgan, libsvm_to_dense, parse_libsvm)
from .resolvents import box_map, product_map
from .solvers import SolverConfig, solve

__all__ = [
    "Problem",
    "build_problem",
    "algorithm_config",
    "ExperimentConfig",
    "load_config",
    "run_single",
    "sweep",
    "aggregate",
    "write_mean_csv",
    "report",
    "PROBLEM_PRESETS",
    "ALGORITHMS",
    "default_out_dir",
]

OUTDIR_ENV = "VRSPLIT_OUTDIR"

# vr_step_mult is the desk-scale comparison step (in units of 1/L) for the
# variance-reduced variants: clipped-spectrum quadratics tolerate 2/L, the
# bilinear game (purely imaginary spectrum) needs the smaller 1/(2L)
PROBLEM_PRESETS = {
    "quadratic": dict(n=500, p1=10, p2=10, vr_step_mult=2.0),
    "quadratic-simplex": dict(n=500, p1=10, p2=10, vr_step_mult=2.0),
    "wgan": dict(n=500, p1=10, p2=10, k_mode="identity", vr_step_mult=0.5),
    "wgan-box": dict(n=500, p1=10, p2=10, k_mode="identity", radius=5.0,
                     vr_step_mult=0.5),
    "logistic-synthetic": dict(N=400, d=30, m=10, reg=1e-3, noise_var=0.5,
                               vr_step_mult=2.0),
    "logistic": dict(m=10, reg=1e-3, noise_var=0.5,
                     vr_step_mult=2.0),  # needs dataset=<path>
    "cohypo2x2": dict(eps=0.01, vr_step_mult=0.5),
}

# algorithm label -> (method base, estimator kind); the method switches to the
# splitting variant automatically when the problem carries a map T
ALGORITHMS = {
    "og": ("og", None),
    "vfr-svrg": ("vfr", "dlsvrg"),    # double-loop snapshot refresh
    "lvfr-svrg": ("vfr", "lsvrg"),    # loopless (coin) refresh
    "vfr-saga": ("vfr", "saga"),
    "vfr-full": ("vfr", "full"),
}


def default_out_dir():
    return os.environ.get(OUTDIR_ENV, "results")


@dataclass
class Problem:
    name: str
    op: object
    T: object | None
    L: float
    x0: np.ndarray
    x_star: np.ndarray | None
    kappa: float
    params: dict


def _merge(preset, overrides):
    params = dict(preset)
    for key, val in (overrides or {}).items():
        if key not in params and key not in ("dataset", "seed"):
            raise ConfigError(f"unknown problem parameter {key!r}")
        params[key] = val
    return params


def build_problem(name, seed=0, **overrides):
    """Instantiate a named problem preset for one seed."""
    if name not in PROBLEM_PRESETS:
        raise ConfigError(f"unknown problem preset {name!r}")
    params = _merge(PROBLEM_PRESETS[name], overrides)

    if name in ("quadratic", "quadratic-simplex"):
        inst, op = gen_quadratic_minimax(params["n"], params["p1"], params["p2"], seed)
        L = averaged_lipschitz(op).value
        T = inst.simplex_constraint() if name.endswith("simplex") else None
        x_star = None
        if T is None:
            x_star = np.linalg.solve(op.mean_mat, -op.mean_offset)
        x0 = np.random.Generator(np.random.Philox(key=np.array(
            [seed, 5], dtype=np.uint64))).standard_normal(op.p)
        return Problem(name, op, T, L, x0, x_star, 0.0, params)

    if name in ("wgan", "wgan-box"):
        inst, op = gen_wgan(params["n"], params["p1"], params["p2"], seed,
                            k_mode=params["k_mode"])
        L = op.lipschitz
        T = box_map(params["radius"]) if name == "wgan-box" else None
        x_star = inst.root() if (params["k_mode"] == "identity" and T is None) else None
        x0 = np.random.Generator(np.random.Philox(key=np.array(
            [seed, 6], dtype=np.uint64))).standard_normal(op.p)
        return Problem(name, op, T, L, x0, x_star, 0.0, params)

    if name == "logistic-synthetic":
        X, y = gen_synthetic_classification(params["N"], params["d"], seed)
        inst, op, T = gen_logistic_ambiguous(X, y, params["m"], params["reg"],
                                             params["noise_var"], seed)
        L = inst.surrogate_lipschitz()
        x0 = 0.5 * np.ones(op.p)
        return Problem(name, op, T, L, x0, None, 0.0, params)

    if name == "logistic":
        path = params.get("dataset")
        if not path:
            raise ConfigError("the logistic preset needs dataset=<libsvm path>")
        rows, labels, nfeat = parse_libsvm(path)
        X = libsvm_to_dense(rows, nfeat)
        inst, op, T = gen_logistic_ambiguous(X, labels, params["m"], params["reg"],
                                             params["noise_var"], seed)
        L = inst.surrogate_lipschitz()
        x0 = 0.5 * np.ones(op.p)
        return Problem(name, op, T, L, x0, None, 0.0, params)

    inst = co_hypomonotone_instance(params["eps"])
    op = inst.to_operator()
    T = None
    from .resolvents import linear_map
    T = linear_map(inst.Tmat)
    x0 = np.array([1.5, -0.7])
    return Problem(name, op, T, op.lipschitz, x0, inst.root(), inst.kappa, params)


def _batch_rules(n, mode):
    if mode == "theory":
        return max(1, int(n ** (2 / 3))), n ** (-1 / 3)
    return max(1, int(0.5 * n ** (2 / 3))), n ** (-1 / 3)


def _expected_iter_cost(n, estimator, b, p):
    if estimator is None:      # optimistic gradient: one full evaluation
        return n
    if estimator == "full":
        return n
    if estimator == "lsvrg":
        return 3 * b + p * n
    if estimator == "saga":
        return 3 * b
    if estimator == "dlsvrg":  # n-cost refresh amortized over floor(n/b) iters
        inner = max(1, n // b)
        return 3 * b + n / inner
    raise ConfigError(f"unknown estimator {estimator!r}")


def algorithm_config(label, problem, epochs, seed, mode="comparison",
                     eta=None, kappa=None):
    """Resolve an algorithm label into a SolverConfig for one problem.

    ``mode="comparison"`` uses b = floor(0.5 n^(2/3)), desk step 2/L for the
    variance-reduced variants and 1/L for the baseline; ``mode="theory"`` uses
    b = floor(n^(2/3)) and the theoretical step.
    """
    if label not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {label!r}")
    base, estimator = ALGORITHMS[label]
    method = base
    if problem.T is not None and base != "og":
        method = "vfrbs"
    n = problem.op.n
    b, p = _batch_rules(n, mode)
    kap = problem.kappa if kappa is None else kappa
    if eta is None:
        if base == "og":
            eta = 1.0 / problem.L
        elif mode == "comparison":
            eta = problem.params.get("vr_step_mult", 2.0) / problem.L
        # theory mode leaves eta=None -> resolved to 1/(L sqrt(M))
    cost = _expected_iter_cost(n, estimator, b, p)
    max_iters = max(1, math.floor(epochs * n / cost))
    return SolverConfig(
        method=method,
        estimator=estimator or "full",
        eta=eta,
        batch_size=None if base == "og" else b,
        snapshot_prob=None if estimator in (None, "full", "saga") else p,
        kappa=kap,
        max_iters=max_iters,
        seed=seed,
        lipschitz=problem.L,
    )


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    problem: str
    algorithms: list[str]
    seeds: list[int]
    epochs: float = 100.0
    out_dir: str = field(default_factory=default_out_dir)
    mode: str = "comparison"
    vary_instance: bool = True   # regenerate data per seed, mean over instances
    problem_overrides: dict = field(default_factory=dict)
    eta_overrides: dict = field(default_factory=dict)  # label -> step size

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        for label in self.algorithms:
            if label not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {label!r}")
        if self.problem not in PROBLEM_PRESETS:
            raise ConfigError(f"unknown problem preset {self.problem!r}")
        if self.mode not in ("comparison", "theory"):
            raise ConfigError(f"unknown mode {self.mode!r}")

    def to_dict(self):
        return {
            "problem": self.problem, "algorithms": list(self.algorithms),
            "seeds": list(self.seeds), "epochs": self.epochs,
            "out_dir": self.out_dir, "mode": self.mode,
            "vary_instance": self.vary_instance,
            "problem_overrides": dict(self.problem_overrides),
            "eta_overrides": dict(self.eta_overrides),
        }


_CONFIG_KEYS = {"problem", "algorithms", "seeds", "epochs", "out_dir", "mode",
                "vary_instance", "problem_overrides", "eta_overrides"}


def load_config(path):
    """Load an ExperimentConfig from a TOML file (table ``[experiment]`` plus
    optional ``[problem_overrides]`` / ``[eta_overrides]`` tables)."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    exp = data.get("experiment", {})
    unknown = set(exp) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    exp.setdefault("problem_overrides", data.get("problem_overrides", {}))
    exp.setdefault("eta_overrides", data.get("eta_overrides", {}))
    try:
        return ExperimentConfig(**exp)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# runs, sweeps, aggregation
# ---------------------------------------------------------------------------

def _csv_name(problem, label, seed):
    return f"{problem}__{label}__seed{seed:03d}.csv"


def _mean_name(problem, label):
    return f"{problem}__{label}__mean.csv"


def run_single(cfg, label, seed, problem=None):
    """Run one (problem, algorithm, seed) cell and return its trajectory."""
    if problem is None:
        inst_seed = seed if cfg.vary_instance else cfg.seeds[0]
        problem = build_problem(cfg.problem, seed=inst_seed,
                                **cfg.problem_overrides)
    scfg = algorithm_config(label, problem, cfg.epochs, seed, mode=cfg.mode,
                            eta=cfg.eta_overrides.get(label))
    traj = solve(problem.op, scfg, problem.x0, T=problem.T,
                 x_star=problem.x_star)
    traj.config["problem"] = cfg.problem
    traj.config["algorithm"] = label
    return traj


def sweep(cfg):
    """Run the algorithm x seed cross product, write per-seed CSVs and one
    aggregated mean CSV per algorithm. Returns the written paths."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []
    for label in cfg.algorithms:
        seed_trajs = []
        for seed in cfg.seeds:
            traj = run_single(cfg, label, seed)
            path = os.path.join(cfg.out_dir, _csv_name(cfg.problem, label, seed))
            traj.write_csv(path)
            paths.append(path)
            seed_trajs.append(traj)
        mean_cols = aggregate(seed_trajs)
        mpath = os.path.join(cfg.out_dir, _mean_name(cfg.problem, label))
        write_mean_csv(mpath, mean_cols, cfg, label)
        paths.append(mpath)
    return paths


def aggregate(trajectories):
    """Pointwise mean across seeds on the shared iteration grid, plus min/max
    envelope of the relative residual. Raises on misaligned grids."""
    iters = [t.column("iter") for t in trajectories]
    base = iters[0]
    for it in iters[1:]:
        if it.shape != base.shape or not np.array_equal(it, base):
            raise ConfigError("trajectories have misaligned record grids")
    rel = np.stack([t.column("rel_residual") for t in trajectories])
    cols = {
        "iter": base,
        "epochs": np.mean([t.column("epochs") for t in trajectories], axis=0),
        "residual": np.mean([t.column("residual") for t in trajectories], axis=0),
        "rel_residual": rel.mean(axis=0),
        "step_norm": np.mean([t.column("step_norm") for t in trajectories], axis=0),
        "rel_residual_min": rel.min(axis=0),
        "rel_residual_max": rel.max(axis=0),
    }
    return cols


def write_mean_csv(path, cols, cfg, label):
    """Mean CSV: the core schema columns (seed = -1, lyapunov empty) plus
    rel_residual_min / rel_residual_max envelope columns."""
    header = ("iter,epochs,residual,rel_residual,step_norm,lyapunov,seed,"
              "rel_residual_min,rel_residual_max")
    with open(path, "w") as fh:
        fh.write(f"# problem: {cfg.problem}\n# algorithm: {label}\n")
        fh.write(f"# seeds: {','.join(str(s) for s in cfg.seeds)}\n")
        fh.write(header + "\n")
        for j in range(cols["iter"].size):
            fh.write(
                f"{int(cols['iter'][j])},{cols['epochs'][j]:.17g},"
                f"{cols['residual'][j]:.17g},{cols['rel_residual'][j]:.17g},"
                f"{cols['step_norm'][j]:.17g},,-1,"
                f"{cols['rel_residual_min'][j]:.17g},"
                f"{cols['rel_residual_max'][j]:.17g}\n")


def epochs_to_threshold(epochs, rel, threshold):
    """First recorded epoch at which the curve is at or below the threshold."""
    hits = np.nonzero(rel <= threshold)[0]
    return float(epochs[hits[0]]) if hits.size else math.inf


def report(out_dir):
    """Assemble a text summary table from the mean CSVs in a sweep directory."""
    lines = [f"{'problem':<22}{'algorithm':<12}{'final rel res':>14}"
             f"{'ep@1e-1':>10}{'ep@1e-2':>10}"]
    for fname in sorted(os.listdir(out_dir)):
        if not fname.endswith("__mean.csv"):
            continue
        cols, _ = read_trajectory_csv(os.path.join(out_dir, fname))
        problem, label, _ = fname.split("__")
        e1 = epochs_to_threshold(cols["epochs"], cols["rel_residual"], 1e-1)
        e2 = epochs_to_threshold(cols["epochs"], cols["rel_residual"], 1e-2)
        lines.append(f"{problem:<22}{label:<12}{cols['rel_residual'][-1]:>14.3e}"
                     f"{e1:>10.1f}{e2:>10.1f}")
    return "\n".join(lines)

"""Brute-force oracles that make the probabilistic estimator claims testable
at desk scale: exact expectations and variances by batch enumeration, an
analytic variance-recursion audit, and PSD certificates for the nonmonotone
instances.

Everything here is measurement code: no oracle counters, no hidden state.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import RngStream
from .estimators import (LsvrgEstimator, SagaEstimator, frq_exact,
                         lsvrg_constants, saga_constants)

__all__ = [
    "EnumerationBudget",
    "BudgetExceeded",
    "enumerate_batches",
    "brute_expectation",
    "brute_variance",
    "delta_exact",
    "monte_carlo_expectation",
    "delta_recursion_audit",
    "weak_minty_certificate",
    "empirical_weak_minty_kappa",
    "run_suites",
]


class BudgetExceeded(RuntimeError):
    """Requested enumeration would exceed the configured outcome budget."""


@dataclass(frozen=True)
class EnumerationBudget:
    max_outcomes: int = 10**6

    def check(self, n, b):
        outcomes = n**b
        if outcomes > self.max_outcomes:
            raise BudgetExceeded(
                f"n^b = {n}^{b} = {outcomes} exceeds budget {self.max_outcomes}")
        return outcomes


def enumerate_batches(n, b, budget=EnumerationBudget()):
    """All ordered with-replacement batches, each carrying weight 1/n^b.

    Ordered enumeration matches the i.i.d. sampling contract; unordered
    subsets would need multinomial weights to agree.
    """
    budget.check(n, b)
    return itertools.product(range(n), repeat=b)


# ---------------------------------------------------------------------------
# exact moments by enumeration
# ---------------------------------------------------------------------------

def _reference_values(est, x_k):
    """Per-component reference vectors entering Delta_k: G_i w for the SVRG
    flavor, the table rows for SAGA."""
    op = est.op
    if isinstance(est, LsvrgEstimator):
        return op.batch_components(np.arange(op.n), est.w)
    if isinstance(est, SagaEstimator):
        return est.table
    raise TypeError(f"no enumeration support for {type(est).__name__}")


def brute_expectation(est, x_k, x_km1, budget=EnumerationBudget()):
    """Exact conditional mean of the estimator over all n^b ordered batches."""
    op = est.op
    b = est.batch_size
    total = np.zeros(op.p)
    count = 0
    for batch in enumerate_batches(op.n, b, budget):
        total += est.value_for_batch(np.array(batch), x_k, x_km1)
        count += 1
    return total / count


def delta_exact(est, x_k, x_km1):
    """Variance envelope Delta_k from its defining sum, conditional on the
    current snapshot/table state:
    (1/(n b)) sum_i ||G_i x^k - g G_i x^{k-1} - (1-g) ref_i||^2."""
    op = est.op
    g = est.gamma
    ref = _reference_values(est, x_k)
    comp_k = op.batch_components(np.arange(op.n), x_k)
    comp_km1 = op.batch_components(np.arange(op.n), x_km1)
    X = comp_k - g * comp_km1 - (1.0 - g) * ref
    return float(np.sum(X * X) / (op.n * est.batch_size))


def brute_variance(est, x_k, x_km1, budget=EnumerationBudget()):
    """Exact E||S_tilde - S||^2 by enumeration plus its two-sided envelope.

    Returns a dict with the exact variance, Delta_k, the tightened bound
    Delta_k - (1/b)||mean-centered term||^2, and the slacks of both
    inequalities (nonnegative up to float error).
    """
    op = est.op
    g = est.gamma
    b = est.batch_size
    s_exact = frq_exact(op.full(x_k), op.full(x_km1), g)
    var = 0.0
    count = 0
    for batch in enumerate_batches(op.n, b, budget):
        d = est.value_for_batch(np.array(batch), x_k, x_km1) - s_exact
        var += float(np.dot(d, d))
        count += 1
    var /= count
    delta = delta_exact(est, x_k, x_km1)
    ref_mean = _reference_values(est, x_k).mean(axis=0)
    m = op.full(x_k) - g * op.full(x_km1) - (1.0 - g) * ref_mean
    tight = delta - float(np.dot(m, m)) / b
    return {
        "variance": var,
        "delta": delta,
        "tight_bound": tight,
        "slack_delta": delta - var,
        "slack_tight": tight - var,
    }


def monte_carlo_expectation(est, x_k, x_km1, samples, seed=0):
    """Sampled mean of the estimator, for convergence-rate cross-checks.

    Both estimator flavors are a state constant plus the batch average of a
    per-component vector, so the sampled mean reduces to a gather-and-average
    over all drawn indices; this keeps a 10^6-sample check fast.
    """
    op = est.op
    g = est.gamma
    idx_all = np.arange(op.n)
    ref = _reference_values(est, x_k)
    Y = (op.batch_components(idx_all, x_k)
         - g * op.batch_components(idx_all, x_km1) - (1.0 - g) * ref)
    if isinstance(est, LsvrgEstimator):
        const = (1.0 - g) * est.gw
    else:
        const = (1.0 - g) * est.table_mean
    rng = RngStream(seed, tag=11)
    total = np.zeros(op.p)
    draws = samples * est.batch_size
    done = 0
    while done < draws:
        chunk = min(draws - done, 10**6)
        idx = rng.integers(op.n, chunk)
        total += Y[idx].sum(axis=0)
        done += chunk
    return const + total / draws


# ---------------------------------------------------------------------------
# variance-recursion audit
# ---------------------------------------------------------------------------

def delta_recursion_audit(op, kind, gamma, b, points, snapshot_prob=None,
                          tol=1e-10):
    """Check Delta_k <= (1-rho) Delta_{k-1} + C U_k + C_hat U_{k-1} along a
    simulated trajectory, with Delta computed exactly.

    The stochastic reference state (snapshot point or table entry) is averaged
    analytically: both flavors refresh each reference to the current point
    with a known probability per step (the coin probability for the SVRG
    flavor, 1 - (1 - 1/n)^b per table entry for SAGA), so the distribution of
    reference ages is a simple geometric recursion and Delta_k is an exact
    mixture over past points. Returns a report dict; PASS iff the minimal
    slack is above -tol at trajectory scale.
    """
    n = op.n
    if kind == "lsvrg":
        refresh = snapshot_prob
        consts = lsvrg_constants(gamma, b, snapshot_prob)
    elif kind == "saga":
        refresh = 1.0 - (1.0 - 1.0 / n) ** b
        consts = saga_constants(gamma, n, b)
    else:
        raise ValueError(f"no recursion audit for kind {kind!r}")

    comp = [op.batch_components(np.arange(n), x) for x in points]
    T = len(points) - 1

    def mixture_delta(k, ages):
        acc = 0.0
        km1 = max(k - 1, 0)
        for j, w in enumerate(ages):
            if w == 0.0:
                continue
            X = comp[k] - gamma * comp[km1] - (1.0 - gamma) * comp[j]
            acc += w * float(np.sum(X * X))
        return acc / (n * b)

    def u_val(k):
        if k <= 0:
            return 0.0
        d = comp[k] - comp[k - 1]
        return float(np.sum(d * d)) / n

    ages = [1.0]  # reference distribution over past points, starts at x^0
    deltas = [mixture_delta(0, ages)]
    slacks = []
    for k in range(1, T + 1):
        ages = [(1.0 - refresh) * w for w in ages]
        while len(ages) < k:
            ages.append(0.0)
        ages[k - 1] += refresh
        d_k = mixture_delta(k, ages)
        bound = (1.0 - consts.rho) * deltas[-1] + consts.C * u_val(k) \
            + consts.C_hat * u_val(k - 1)
        scale = max(1.0, d_k, bound)
        slacks.append((bound - d_k) / scale)
        deltas.append(d_k)
    min_slack = min(slacks) if slacks else 0.0
    return {
        "kind": kind,
        "steps": T,
        "min_slack": min_slack,
        "pass": bool(min_slack >= -tol),
        "deltas": deltas,
        "slacks": slacks,
    }


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def weak_minty_certificate(Gmat, Tmat, kappa, tol=1e-12):
    """PSD report for 0.5(G+G'+T+T') + kappa (G+T)'(G+T).

    For affine G and linear T this matrix is PSD exactly when the sum is
    kappa-co-hypomonotone, which is sufficient for the weak-Minty condition
    at every solution.
    """
    Gmat = np.asarray(Gmat, dtype=np.float64)
    Tmat = np.asarray(Tmat, dtype=np.float64)
    A = Gmat + Tmat
    S = 0.5 * (Gmat + Gmat.T + Tmat + Tmat.T) + kappa * A.T @ A
    eigs = np.linalg.eigvalsh(S)
    scale = max(1.0, float(np.abs(eigs).max()))
    ok = bool(eigs.min() >= -tol * scale)
    return {
        "kappa": float(kappa),
        "eigenvalues": [float(e) for e in eigs],
        "min_eigenvalue": float(eigs.min()),
        "pass": ok,
    }


def empirical_weak_minty_kappa(residuals, iterates, x_hat):
    """Smallest kappa-hat with <w^k, x^k - x_hat> >= -kappa_hat ||w^k||^2 along
    a trajectory. Reported, never asserted: trajectories only witness the
    condition, they cannot certify it.
    """
    worst = 0.0
    for w, x in zip(residuals, iterates):
        wsq = float(np.dot(w, w))
        if wsq == 0.0:
            continue
        worst = max(worst, -float(np.dot(w, x - x_hat)) / wsq)
    return worst


# ---------------------------------------------------------------------------
# machine-readable suite (CLI entry)
# ---------------------------------------------------------------------------

def _random_affine_op(n, p, seed):
    from .operators import AffineFiniteSum
    rng = RngStream(seed, tag=21)
    mats = rng.standard_normal((n, p, p))
    offs = rng.standard_normal((n, p))
    return AffineFiniteSum(mats, offs)


def _random_lsvrg(op, gamma, b, p_coin, rng):
    est = LsvrgEstimator(op, gamma, b, p_coin)
    est.w = rng.standard_normal(op.p)
    est.gw = op.full(est.w)
    return est


def _random_saga(op, gamma, b, rng):
    est = SagaEstimator(op, gamma, b)
    est.table = rng.standard_normal((op.n, op.p))
    est.table_mean = est.table.mean(axis=0)
    return est


def run_suites(states=10, seed=0):
    """Run the estimator-class and certificate checks; return a JSON-able
    PASS/FAIL report."""
    from .problems import co_hypomonotone_instance

    report = {}
    gamma, p_coin = 0.75, 0.25
    grid = [(4, 1), (4, 2), (6, 2)]
    worst_bias, worst_var_slack = 0.0, 0.0
    rng = RngStream(seed, tag=22)
    for n, b in grid:
        op = _random_affine_op(n, 3, seed + n + b)
        for make in (lambda: _random_lsvrg(op, gamma, b, p_coin, rng),
                     lambda: _random_saga(op, gamma, b, rng)):
            for _ in range(states):
                est = make()
                x_k = rng.standard_normal(op.p)
                x_km1 = rng.standard_normal(op.p)
                mean = brute_expectation(est, x_k, x_km1)
                exact = frq_exact(op.full(x_k), op.full(x_km1), gamma)
                worst_bias = max(worst_bias,
                                 float(np.linalg.norm(mean - exact)))
                rep = brute_variance(est, x_k, x_km1)
                worst_var_slack = min(worst_var_slack, rep["slack_tight"],
                                      rep["slack_delta"])
    report["unbiasedness"] = {"worst_error": worst_bias,
                              "pass": bool(worst_bias <= 1e-12)}
    report["variance_bound"] = {"worst_slack": worst_var_slack,
                                "pass": bool(worst_var_slack >= -1e-12)}

    op = _random_affine_op(6, 3, seed + 99)
    walk = [rng.standard_normal(op.p)]
    for _ in range(100):
        walk.append(walk[-1] + 0.3 * rng.standard_normal(op.p))
    audit_s = delta_recursion_audit(op, "lsvrg", gamma, 2, walk,
                                    snapshot_prob=p_coin)
    audit_g = delta_recursion_audit(op, "saga", gamma, 2, walk)
    report["delta_recursion"] = {
        "lsvrg_min_slack": audit_s["min_slack"],
        "saga_min_slack": audit_g["min_slack"],
        "pass": bool(audit_s["pass"] and audit_g["pass"]),
    }

    inst = co_hypomonotone_instance(0.01)
    cert = weak_minty_certificate(inst.Gmat, inst.Tmat, inst.kappa)
    cert0 = weak_minty_certificate(inst.Gmat, inst.Tmat, 0.0)
    report["weak_minty_certificate"] = {
        "at_kappa": cert, "at_zero": cert0,
        "pass": bool(cert["pass"] and not cert0["pass"]),
    }
    report["pass"] = all(v["pass"] for v in report.values()
                         if isinstance(v, dict) and "pass" in v)
    return report


def suites_to_json(report, indent=2):
    return json.dumps(report, indent=indent)

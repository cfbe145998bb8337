"""Iteration loops: the variance-reduced forward-reflected method (root
finding), its forward-reflected-backward splitting variant (inclusions), the
deterministic optimistic-gradient baseline, and a double-loop SVRG variant.

Residual metrics always use full-batch evaluations but are excluded from
oracle accounting: they are measurement, not algorithmic work.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import ConfigError, OracleCounter, RngStream, Trajectory, TrajectoryRecord
from .estimators import constants_for, make_estimator, vfr_theory, vfrbs_theory
from .operators import averaged_lipschitz
from .resolvents import element_of_T

__all__ = [
    "SolverConfig",
    "solve",
    "vfr_update",
    "vfrbs_update",
    "og_update",
    "fbs_residual",
    "lyapunov_mu",
    "lyapunov_value",
    "vfr_residual_bound",
    "vfrbs_residual_bound",
]

METHODS = ("vfr", "vfrbs", "og")
ESTIMATORS = ("full", "lsvrg", "saga", "dlsvrg")


@dataclass
class SolverConfig:
    method: str = "vfr"
    estimator: str = "full"
    gamma: float = 0.75
    eta: float | None = None      # None -> theory step 1/(L sqrt(M))
    batch_size: int | None = None
    snapshot_prob: float | None = None
    kappa: float = 0.0
    max_iters: int | None = None
    max_epochs: float | None = None
    seed: int = 0
    record_every: int | None = None   # None -> once per epoch-equivalent
    divergence_factor: float = 1e6
    lipschitz: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.eta is not None and self.eta <= 0:
            raise ConfigError("eta must be positive")
        if self.method in ("vfr", "vfrbs") and not (0.5 < self.gamma < 1.0):
            raise ConfigError(f"gamma must lie in (1/2, 1), got {self.gamma}")
        if self.max_iters is None and self.max_epochs is None:
            raise ConfigError("set max_iters and/or max_epochs")

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# single-update algebra (unit-testable pieces)
# ---------------------------------------------------------------------------

def vfr_update(x_k, eta, s_tilde):
    """x^{k+1} = x^k - eta * S_tilde^k."""
    return x_k - eta * s_tilde


def vfrbs_update(x_k, y_k, s_tilde, eta, gamma, T, counter=None):
    """One splitting update:

        y^{k+1} = x^k - eta S_tilde^k + ((2g-1)/g)(y^k - x^k)
        x^{k+1} = J_{g eta T}(y^{k+1}),  v^{k+1} = (y^{k+1} - x^{k+1})/(g eta)

    Returns (y_next, x_next, v_next).
    """
    y_next = x_k - eta * s_tilde + ((2.0 * gamma - 1.0) / gamma) * (y_k - x_k)
    x_next = T.resolve(gamma * eta, y_next, counter)
    v_next = (y_next - x_next) / (gamma * eta)
    return y_next, x_next, v_next


def og_update(x_k, gx_k, gx_km1, eta, T=None, counter=None):
    """Optimistic-gradient update x^{k+1} = x^k - eta (2 G x^k - G x^{k-1}),
    composed with J_{eta T} when a map T is present. Returns (x_next, v_next)."""
    z = x_k - eta * (2.0 * gx_k - gx_km1)
    if T is None:
        return z, None
    x_next = T.resolve(eta, z, counter)
    v_next = (z - x_next) / eta
    return x_next, v_next


def fbs_residual(op, T, eta, x):
    """Forward-backward residual (x - J_{eta T}(x - eta G x)) / eta.

    Zero exactly at solutions of the inclusion; a pure metric, uncounted.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    gx = op.full(x)
    if T is None:
        return gx
    return (x - T.resolve(eta, x - eta * gx)) / eta


# ---------------------------------------------------------------------------
# Lyapunov monitoring (deterministic mode)
# ---------------------------------------------------------------------------

def lyapunov_mu(method, gamma):
    """Default potential weight: 3(2g-1)/4 for root finding, (1-g)/(3g-1)
    for the splitting method."""
    if method == "vfr":
        return 3.0 * (2.0 * gamma - 1.0) / 4.0
    if method == "vfrbs":
        return (1.0 - gamma) / (3.0 * gamma - 1.0)
    raise ConfigError(f"no Lyapunov form for method {method!r}")


def lyapunov_value(x_k, x_km1, gx_km1, x_star, gamma_eta, mu, v_k=None, extra=0.0):
    """Potential value at one iterate.

    Root-finding form:  ||x^k + ge*G x^{k-1} - x*||^2 + mu ||x^k - x^{k-1}||^2.
    Splitting form (v_k given, w = G x^{k-1} + v^k):
        ||x^k + ge*w - x*||^2 + mu ||x^k - x^{k-1} + ge*w||^2.
    ``extra`` carries the variance and lagged-step terms of the full
    potential; it is identically zero in full-batch (deterministic) mode.
    """
    if v_k is None:
        core = x_k + gamma_eta * gx_km1 - x_star
        corr = mu * float(np.dot(x_k - x_km1, x_k - x_km1))
    else:
        w = gx_km1 + v_k
        core = x_k + gamma_eta * w - x_star
        d = x_k - x_km1 + gamma_eta * w
        corr = mu * float(np.dot(d, d))
    return float(np.dot(core, core)) + corr + extra


def vfr_residual_bound(gamma, eta, L, dist0_sq, K):
    """Averaged-residual bound Theta_1 ||x^0 - x*||^2 / (K+1)."""
    theta1 = 2.0 * (1.0 + (L * eta) ** 2) / (gamma * (1.0 - gamma) * eta * eta)
    return theta1 * dist0_sq / (K + 1.0)


def vfrbs_residual_bound(gamma, eta, kappa, r0hat_sq, K):
    """Averaged-residual bound Theta_hat_1 R_hat_0^2 / (eta^2 (K+1))."""
    den = (1.0 - gamma) * (gamma * (2.0 * gamma - 1.0) * eta
                           - (3.0 * gamma - 1.0) * kappa)
    theta1 = (3.0 * gamma - 1.0) * eta / den
    return theta1 * r0hat_sq / (eta * eta * (K + 1.0))


# ---------------------------------------------------------------------------
# run loop
# ---------------------------------------------------------------------------

def _resolve_eta(cfg, op):
    if cfg.eta is not None:
        return cfg.eta, cfg.lipschitz
    L = cfg.lipschitz if cfg.lipschitz is not None else op.lipschitz
    if L is None:
        L = averaged_lipschitz(op).value
    kind = "lsvrg" if cfg.estimator == "dlsvrg" else cfg.estimator
    consts = constants_for(kind, cfg.gamma, op.n,
                           batch_size=cfg.batch_size,
                           snapshot_prob=cfg.snapshot_prob)
    if cfg.method == "vfrbs":
        theo = vfrbs_theory(cfg.gamma, consts, L, cfg.kappa)
    else:
        theo = vfr_theory(cfg.gamma, consts, L, cfg.kappa)
    return theo.eta, L


def _budget_left(cfg, k, counter, n):
    if cfg.max_iters is not None and k >= cfg.max_iters:
        return False
    if cfg.max_epochs is not None and counter.epochs(n) >= cfg.max_epochs:
        return False
    return True


def solve(op, cfg, x0, T=None, x_star=None, record_lyapunov=False):
    """Run one configured solver and return its :class:`Trajectory`.

    For splitting runs (``method="vfrbs"`` or ``og`` with a map T), ``x0`` is
    the pre-resolvent point y^0; the run starts from x^0 = J_{g eta T}(y^0).
    Residuals are ||G x^k|| for root finding and ||G x^k + v^k|| for
    inclusions; the run aborts with a ``diverged`` flag when the residual
    exceeds ``divergence_factor`` times its initial value or turns non-finite.
    """
    n = op.n
    x0 = np.asarray(x0, dtype=np.float64)
    counter = OracleCounter()
    rng = RngStream(cfg.seed, tag=0)
    eta, _ = _resolve_eta(cfg, op)
    b = cfg.batch_size if cfg.batch_size is not None else n
    gamma = cfg.gamma

    if cfg.method == "og" or cfg.estimator == "full":
        cadence = 1
    else:
        cadence = max(1, round(n / (3.0 * b)))
    if cfg.record_every is not None:
        cadence = cfg.record_every

    config_snapshot = dict(cfg.to_dict(), eta_resolved=eta, n=n, p=op.p)
    traj = Trajectory(config=config_snapshot, seed=cfg.seed)

    if cfg.method == "og":
        _run_og(op, T, cfg, x0, eta, counter, traj, x_star, record_lyapunov)
    elif cfg.method == "vfrbs":
        _run_vr(op, T, cfg, x0, eta, b, gamma, rng, counter, traj, cadence,
                x_star, record_lyapunov, splitting=True)
    else:
        _run_vr(op, None, cfg, x0, eta, b, gamma, rng, counter, traj, cadence,
                x_star, record_lyapunov, splitting=False)
    return traj


def _record(traj, k, counter, n, residual, r0, step_norm, lyap):
    rel = residual / r0 if r0 > 0 else 1.0
    traj.append(TrajectoryRecord(k, counter.epochs(n), residual, rel,
                                 step_norm, lyap))


def _run_vr(op, T, cfg, start, eta, b, gamma, rng, counter, traj, cadence,
            x_star, record_lyapunov, splitting):
    n = op.n
    gamma_eta = gamma * eta
    if splitting:
        if T is None:
            raise ConfigError("splitting method needs a map T")
        y = start
        x = T.resolve(gamma_eta, y, counter)
        v = (y - x) / gamma_eta
    else:
        x = start.copy()
        y = v = None
    xm = x.copy()
    double_loop = cfg.estimator == "dlsvrg"
    inner = max(1, n // b) if double_loop else None

    def metric_gx(z):
        return op.full(z)  # uncounted: measurement only

    # the starting record lands at epoch 0: estimator initialization cost
    # (snapshot / table build) is charged to the first interval
    gx = metric_gx(x)
    residual = float(np.linalg.norm(gx + v)) if splitting else float(np.linalg.norm(gx))
    r0 = residual
    guard = cfg.divergence_factor * max(r0, 1.0)
    mu = lyapunov_mu(cfg.method, gamma) if record_lyapunov else None
    lyap = None
    if record_lyapunov and x_star is not None:
        lyap = lyapunov_value(x, xm, gx, x_star, gamma_eta, mu, v_k=v)
    _record(traj, 0, counter, n, residual, r0, 0.0, lyap)
    prev_gx = gx

    est = make_estimator(op, "lsvrg" if cfg.estimator == "dlsvrg" else cfg.estimator,
                         gamma, b, cfg.snapshot_prob)
    est.reset(x, counter)

    k = 0
    while _budget_left(cfg, k, counter, n):
        if double_loop and k > 0 and k % inner == 0:
            # snapshot refresh at the start of each outer block, at the
            # previous block's final iterate
            est.snapshot_update(x, True, counter)
        if est.kind == "full":
            batch = None
        elif b >= n:
            batch = np.arange(n)  # deterministic full batch: exact reduction
        else:
            batch = rng.sample_batch(n, b)
        s = est.value_for_batch(batch, x, xm, counter)
        if splitting:
            y_next, x_next, v_next = vfrbs_update(x, y, s, eta, gamma, T, counter)
        else:
            x_next = vfr_update(x, eta, s)
        # estimator state transitions use the pre-step point x^k
        if est.kind == "lsvrg" and not double_loop:
            est.snapshot_update(x, rng.flip_coin(cfg.snapshot_prob), counter)
        elif est.kind == "saga":
            est.table_update(batch, x, counter)
        if splitting:
            xm, x, y, v = x, x_next, y_next, v_next
        else:
            xm, x = x, x_next
        k += 1
        if not np.all(np.isfinite(x)):
            traj.diverged = True
            break
        if k % cadence == 0 or not _budget_left(cfg, k, counter, n):
            gx = metric_gx(x)
            residual = float(np.linalg.norm(gx + v)) if splitting \
                else float(np.linalg.norm(gx))
            lyap = None
            if record_lyapunov and x_star is not None:
                lyap = lyapunov_value(x, xm, prev_gx, x_star, gamma_eta, mu, v_k=v)
            step_norm = float(np.linalg.norm(x - xm))
            if not math.isfinite(residual) or residual > guard:
                traj.diverged = True
                break
            _record(traj, k, counter, n, residual, r0, step_norm, lyap)
            prev_gx = gx
        elif record_lyapunov:
            prev_gx = metric_gx(x)


def _run_og(op, T, cfg, start, eta, counter, traj, x_star, record_lyapunov):
    n = op.n
    if T is not None:
        y = start
        x = T.resolve(eta, y, counter)
        v = (y - x) / eta
    else:
        x = start.copy()
        v = None
    xm = x.copy()
    gx0 = op.full(x)  # metric at the start; the algorithm re-pays it at k=0
    residual = float(np.linalg.norm(gx0 + v)) if T is not None \
        else float(np.linalg.norm(gx0))
    r0 = residual
    guard = cfg.divergence_factor * max(r0, 1.0)
    _record(traj, 0, counter, n, residual, r0, 0.0, None)

    k = 0
    gx_prev = None
    while _budget_left(cfg, k, counter, n):
        gx = op.full(x, counter)
        if gx_prev is None:
            gx_prev = gx  # x^{-1} = x^0
        x_next, v_next = og_update(x, gx, gx_prev, eta, T, counter)
        gx_prev = gx
        xm, x = x, x_next
        if T is not None:
            v = v_next
        k += 1
        if not np.all(np.isfinite(x)):
            traj.diverged = True
            break
        gmx = op.full(x)  # metric, uncounted
        residual = float(np.linalg.norm(gmx + v)) if T is not None \
            else float(np.linalg.norm(gmx))
        if not math.isfinite(residual) or residual > guard:
            traj.diverged = True
            break
        _record(traj, k, counter, n, residual, r0, float(np.linalg.norm(x - xm)), None)

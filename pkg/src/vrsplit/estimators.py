"""Forward-reflected quantity S_gamma^k = G x^k - gamma * G x^{k-1}, its
unbiased variance-reduced estimators (loopless-SVRG and SAGA flavors), and
the constant calculators behind the theoretical step sizes.

Estimator states are single-owner mutable; one instance per solver run. The
constant calculators are pure functions with no hidden rounding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError

__all__ = [
    "frq_exact",
    "FrqConfig",
    "EstimatorConstants",
    "lsvrg_constants",
    "saga_constants",
    "full_batch_constants",
    "TheoryConstants",
    "InfeasibleParameters",
    "vfr_theory",
    "vfrbs_theory",
    "vfr_sigma",
    "vfr_gamma_complexity",
    "vfrbs_sigma",
    "theta1_vfr",
    "theta1_vfrbs",
    "FullBatchFrq",
    "LsvrgEstimator",
    "SagaEstimator",
    "make_estimator",
    "REFERENCE_STEP_SIZES",
]


def frq_exact(gx_k, gx_km1, gamma):
    """Exact forward-reflected quantity G x^k - gamma * G x^{k-1}."""
    if gx_k.shape != gx_km1.shape:
        raise ValueError("operator value shapes differ")
    return gx_k - gamma * gx_km1


@dataclass(frozen=True)
class FrqConfig:
    """Estimator parameters: damping gamma in (1/2, 1), batch size b, and the
    snapshot probability (SVRG only)."""

    gamma: float
    batch_size: int
    snapshot_prob: float | None = None

    def __post_init__(self):
        if not (0.5 < self.gamma < 1.0):
            raise ConfigError(f"gamma must lie in (1/2, 1), got {self.gamma}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.snapshot_prob is not None and not (0.0 < self.snapshot_prob < 1.0):
            raise ConfigError(
                f"snapshot probability must be in (0, 1), got {self.snapshot_prob}")


# ---------------------------------------------------------------------------
# estimator-class constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorConstants:
    """(rho, C, C_hat) of the variance-transfer recursion
    Delta_k <= (1 - rho) Delta_{k-1} + C*U_k + C_hat*U_{k-1}."""

    rho: float
    C: float
    C_hat: float
    family: str  # "svrg" | "saga" | "full"

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0):
            raise ConfigError(f"rho must lie in (0, 1], got {self.rho}")
        if self.C < 0 or self.C_hat < 0:
            raise ConfigError("C and C_hat must be nonnegative")

    @property
    def lam(self):
        """Variance amplification Lambda = (C + C_hat) / rho."""
        return (self.C + self.C_hat) / self.rho


def lsvrg_constants(gamma, b, p):
    """Loopless-SVRG constants: rho = p/2, C = (4 - 6p + 3p^2)/(bp),
    C_hat = 2 gamma^2 (2 - 3p + p^2)/(bp)."""
    FrqConfig(gamma, b, p)
    rho = p / 2.0
    C = (4.0 - 6.0 * p + 3.0 * p * p) / (b * p)
    C_hat = 2.0 * gamma * gamma * (2.0 - 3.0 * p + p * p) / (b * p)
    return EstimatorConstants(rho, C, C_hat, "svrg")


def saga_constants(gamma, n, b):
    """SAGA constants: rho = b/(2n), C = (2(n-b)(2n+b) + b^2)/(n b^2),
    C_hat = 2 (n-b)(2n+b) gamma^2 / (n b^2)."""
    if not (1 <= b <= n):
        raise ConfigError(f"need 1 <= b <= n, got b={b}, n={n}")
    FrqConfig(gamma, b)
    rho = b / (2.0 * n)
    core = 2.0 * (n - b) * (2.0 * n + b)
    C = (core + b * b) / (n * b * b)
    C_hat = core * gamma * gamma / (n * b * b)
    return EstimatorConstants(rho, C, C_hat, "saga")


def full_batch_constants():
    """Exact estimator: zero variance, rho = 1, C = C_hat = 0."""
    return EstimatorConstants(1.0, 0.0, 0.0, "full")


# ---------------------------------------------------------------------------
# theory constants and step sizes
# ---------------------------------------------------------------------------

class InfeasibleParameters(ConfigError):
    """L*kappa exceeds the admissible threshold delta for these constants."""

    def __init__(self, message, max_kappa):
        super().__init__(message)
        self.max_kappa = max_kappa


def vfr_sigma(gamma, family):
    """Step-size lower-bound coefficient sigma for the forward-reflected method."""
    if family == "svrg":
        return math.sqrt(3.0 * (2.0 * gamma - 1.0)) / math.sqrt(
            8.0 + 49.0 * gamma + 13.0 * gamma**2 + 48.0 * gamma**3)
    if family == "saga":
        return math.sqrt(3.0 * (2.0 * gamma - 1.0)) / math.sqrt(
            10.0 + 61.0 * gamma + 13.0 * gamma**2 + 48.0 * gamma**3)
    return None


def vfr_gamma_complexity(gamma, family):
    """Complexity constant multiplying L^2 R_0^2 n^{2/3} / eps^2."""
    if family == "svrg":
        num = 2.0 * (5.0 * gamma**2 + 7.0 * gamma - 3.0) * (
            8.0 + 49.0 * gamma + 13.0 * gamma**2 + 48.0 * gamma**3)
        den = 3.0 * gamma**2 * (2.0 * gamma - 1.0) * (1.0 - gamma) * (1.0 + 5.0 * gamma)
        return num / den
    if family == "saga":
        num = 2.0 * (7.0 * gamma + 5.0 * gamma**2 - 3.0) * (
            10.0 + 61.0 * gamma + 13.0 * gamma**2 + 48.0 * gamma**3)
        den = 3.0 * gamma**2 * (1.0 - gamma) * (2.0 * gamma - 1.0) * (1.0 + 5.0 * gamma)
        return num / den
    return None


def vfrbs_sigma(gamma, family):
    """Step-size lower-bound coefficient sigma for the splitting method."""
    if family == "svrg":
        return math.sqrt(1.0 - gamma) / (2.0 * math.sqrt(8.0 + gamma + 7.0 * gamma**2))
    if family == "saga":
        return math.sqrt(1.0 - gamma) / (
            2.0 * math.sqrt(gamma * (10.0 + gamma + 7.0 * gamma**2)))
    return None


def theta1_vfr(gamma, eta, L):
    """Averaged residual-bound constant 2(1 + L^2 eta^2)/(gamma (1-gamma) eta^2)."""
    return 2.0 * (1.0 + (L * eta) ** 2) / (gamma * (1.0 - gamma) * eta * eta)


def theta1_vfrbs(gamma, eta, kappa):
    """Averaged residual-bound constant
    (3g-1) eta / ((1-g) [g(2g-1) eta - (3g-1) kappa])."""
    den = (1.0 - gamma) * (gamma * (2.0 * gamma - 1.0) * eta - (3.0 * gamma - 1.0) * kappa)
    if den <= 0:
        raise InfeasibleParameters(
            "step size does not exceed the kappa-dependent lower bound",
            max_kappa=gamma * (2.0 * gamma - 1.0) * eta / (3.0 * gamma - 1.0))
    return (3.0 * gamma - 1.0) * eta / den


@dataclass(frozen=True)
class TheoryConstants:
    """Derived constants for one (method, estimator family, gamma, L, kappa)."""

    method: str  # "vfr" | "vfrbs"
    family: str
    gamma: float
    rho: float
    C: float
    C_hat: float
    lam: float
    M: float
    delta: float
    eta: float
    eta_lower: float  # kappa-dependent lower admissible step
    L: float
    kappa: float
    sigma: float | None
    gamma_complexity: float | None

    def to_json(self, indent=None):
        return json.dumps(
            {k: getattr(self, k) for k in (
                "method", "family", "gamma", "rho", "C", "C_hat", "lam", "M",
                "delta", "eta", "eta_lower", "L", "kappa", "sigma",
                "gamma_complexity")},
            indent=indent)


def vfr_theory(gamma, consts, L, kappa=0.0):
    """Constants for the forward-reflected root-finding method:
    M = g(1+5g)/(3(2g-1)) + (1+6g)/(3(2g-1)) * Lambda, delta = (2g-1)/(8 sqrt(M)),
    theory step eta = 1/(L sqrt(M)), admissible range 8 kappa/(2g-1) <= eta."""
    if not (0.5 < gamma < 1.0):
        raise ConfigError(f"gamma must lie in (1/2, 1), got {gamma}")
    lam = consts.lam
    M = gamma * (1.0 + 5.0 * gamma) / (3.0 * (2.0 * gamma - 1.0)) \
        + (1.0 + 6.0 * gamma) / (3.0 * (2.0 * gamma - 1.0)) * lam
    delta = (2.0 * gamma - 1.0) / (8.0 * math.sqrt(M))
    if L * kappa > delta:
        raise InfeasibleParameters(
            f"L*kappa = {L * kappa:.3e} exceeds delta = {delta:.3e}; "
            f"largest admissible kappa is {delta / L:.3e}",
            max_kappa=delta / L)
    eta = 1.0 / (L * math.sqrt(M))
    eta_lower = 8.0 * kappa / (2.0 * gamma - 1.0)
    return TheoryConstants(
        "vfr", consts.family, gamma, consts.rho, consts.C, consts.C_hat, lam,
        M, delta, eta, eta_lower, L, kappa,
        vfr_sigma(gamma, consts.family), vfr_gamma_complexity(gamma, consts.family))


def vfrbs_theory(gamma, consts, L, kappa=0.0):
    """Constants for the splitting method: M = 4g^2 + (4g/(1-g)) * Lambda,
    delta = g(2g-1)/((3g-1) sqrt(M)), step range
    (3g-1) kappa/(g(2g-1)) < eta <= 1/(L sqrt(M))."""
    if not (0.5 < gamma < 1.0):
        raise ConfigError(f"gamma must lie in (1/2, 1), got {gamma}")
    lam = consts.lam
    M = 4.0 * gamma * gamma + 4.0 * gamma / (1.0 - gamma) * lam
    delta = gamma * (2.0 * gamma - 1.0) / ((3.0 * gamma - 1.0) * math.sqrt(M))
    if L * kappa >= delta:
        raise InfeasibleParameters(
            f"L*kappa = {L * kappa:.3e} is not below delta = {delta:.3e}; "
            f"kappa must be strictly below {delta / L:.3e}",
            max_kappa=delta / L)
    eta = 1.0 / (L * math.sqrt(M))
    eta_lower = (3.0 * gamma - 1.0) * kappa / (gamma * (2.0 * gamma - 1.0))
    sigma = vfrbs_sigma(gamma, consts.family)
    gamma_c = None
    if sigma is not None:
        gamma_c = theta1_vfrbs(gamma, eta, kappa) / sigma**2
    return TheoryConstants(
        "vfrbs", consts.family, gamma, consts.rho, consts.C, consts.C_hat, lam,
        M, delta, eta, eta_lower, L, kappa, sigma, gamma_c)


# Step sizes printed for the n = 10^4 worked example. The p = 0.1 SVRG value
# is exactly reproducible from the formulas above (and is asserted in the
# acceptance suite); the other two disagree with their own formulas
# (independent evaluation: 0.14891/L and 0.14562/L) and are kept only as
# unasserted reference metadata.
REFERENCE_STEP_SIZES = {
    ("svrg", 10_000, 464, 0.1): 0.3038,
    ("svrg", 10_000, 464, 10_000 ** (-1 / 3)): 0.1456,
    ("saga", 10_000, 464, None): 0.1603,
}


# ---------------------------------------------------------------------------
# estimator state machines
# ---------------------------------------------------------------------------

class FullBatchFrq:
    """Exact estimator: S_tilde^k = G x^k - gamma * G x^{k-1}, reusing the
    previous full value so each step costs n fresh component evaluations."""

    kind = "full"

    def __init__(self, op, gamma):
        self.op = op
        self.gamma = gamma
        self._g_prev = None
        self._first = True

    def reset(self, x0, counter=None):
        self._g_prev = self.op.full(x0, counter)
        self._first = True

    def value_for_batch(self, batch, x_k, x_km1, counter=None):
        if self._first:
            gx_k = self._g_prev  # x^0 = x^{-1}; initialization value (1-gamma) G x^0
            self._first = False
        else:
            gx_k = self.op.full(x_k, counter)
        s = gx_k - self.gamma * self._g_prev
        self._g_prev = gx_k
        return s


class LsvrgEstimator:
    """Loopless-SVRG estimator for the forward-reflected quantity:

        S_tilde^k = (1-g)(G w^k - G_B w^k) + G_B x^k - g * G_B x^{k-1},

    with the snapshot w refreshed to the current point with probability p.
    """

    kind = "lsvrg"

    def __init__(self, op, gamma, batch_size, snapshot_prob):
        FrqConfig(gamma, batch_size, snapshot_prob)
        self.op = op
        self.gamma = gamma
        self.batch_size = batch_size
        self.snapshot_prob = snapshot_prob
        self.w = None
        self.gw = None

    def reset(self, x0, counter=None):
        """Set w^0 = x^0 and cache the full value G w^0 (n evaluations)."""
        self.w = np.array(x0, dtype=np.float64, copy=True)
        self.gw = self.op.full(self.w, counter)

    def value_for_batch(self, batch, x_k, x_km1, counter=None):
        g = self.gamma
        gbw = self.op.minibatch(batch, self.w, counter)
        gbx = self.op.minibatch(batch, x_k, counter)
        gbxm = self.op.minibatch(batch, x_km1, counter)
        return (1.0 - g) * (self.gw - gbw) + gbx - g * gbxm

    def snapshot_update(self, x_k, coin, counter=None):
        """On a true coin, w <- x^k and the cached full value is recomputed."""
        if coin:
            self.w = np.array(x_k, dtype=np.float64, copy=True)
            self.gw = self.op.full(self.w, counter)


class SagaEstimator:
    """SAGA estimator for the forward-reflected quantity:

        S_tilde^k = [G_B x^k - g*G_B x^{k-1} - (1-g) T_B] + (1-g)/n sum_i T_i,

    where T is the per-component table refreshed on sampled indices. The
    running table mean is updated incrementally and resynchronized against
    the full table every n entry updates to bound float drift.
    """

    kind = "saga"

    def __init__(self, op, gamma, batch_size):
        FrqConfig(gamma, batch_size)
        self.op = op
        self.gamma = gamma
        self.batch_size = batch_size
        self.table = None
        self.table_mean = None
        self._updates_since_sync = 0
        self._cache = None  # (batch, x_k, component values) from the last value call

    def reset(self, x0, counter=None):
        """Initialize the table at T_i = G_i x^0 (n evaluations)."""
        self.table = self.op.batch_components(np.arange(self.op.n), x0, counter).copy()
        self.table_mean = self.table.mean(axis=0)
        self._updates_since_sync = 0
        self._cache = None

    def value_for_batch(self, batch, x_k, x_km1, counter=None):
        g = self.gamma
        comp_k = self.op.batch_components(batch, x_k, counter)
        gbxm = self.op.minibatch(batch, x_km1, counter)
        tb = self.table[batch].mean(axis=0)
        self._cache = (np.asarray(batch), x_k, comp_k)
        return comp_k.mean(axis=0) - g * gbxm - (1.0 - g) * tb + (1.0 - g) * self.table_mean

    def table_update(self, batch, x_k, counter=None):
        """Refresh table entries for the sampled indices with G_i x^k.

        Values are reused from the preceding estimate when available; the
        paper-compatible counter is still credited b evaluations (duplicates
        idempotent, no fresh oracle work).
        """
        batch = np.asarray(batch)
        if (self._cache is not None and self._cache[1] is x_k
                and np.array_equal(self._cache[0], batch)):
            vals = self._cache[2]
            if counter is not None:
                counter.add_reused(batch.size)
        else:
            vals = self.op.batch_components(batch, x_k, counter)
        n = self.op.n
        for j, i in enumerate(batch):
            self.table_mean = self.table_mean + (vals[j] - self.table[i]) / n
            self.table[i] = vals[j]
            self._updates_since_sync += 1
        if self._updates_since_sync >= n:
            self.table_mean = self.table.mean(axis=0)
            self._updates_since_sync = 0


def make_estimator(op, kind, gamma, batch_size=None, snapshot_prob=None):
    """Build an estimator state machine by kind tag."""
    if kind == "full":
        return FullBatchFrq(op, gamma)
    if kind == "lsvrg":
        return LsvrgEstimator(op, gamma, batch_size, snapshot_prob)
    if kind == "saga":
        return SagaEstimator(op, gamma, batch_size)
    raise ConfigError(f"unknown estimator kind {kind!r}")


def constants_for(kind, gamma, n, batch_size=None, snapshot_prob=None):
    """Estimator-class constants matching :func:`make_estimator` kinds."""
    if kind == "full":
        return full_batch_constants()
    if kind == "lsvrg":
        return lsvrg_constants(gamma, batch_size, snapshot_prob)
    if kind == "saga":
        return saga_constants(gamma, n, batch_size)
    raise ConfigError(f"unknown estimator kind {kind!r}")

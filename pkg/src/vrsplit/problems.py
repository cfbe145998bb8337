"""Experiment instance generators: quadratic minimax families, the synthetic
bilinear WGAN game, logistic regression with ambiguous features, the analytic
2x2 nonmonotone verification instance, and LIBSVM text ingestion.

Generators are pure functions of (seed, parameters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import RngStream, as_vec
from .operators import AffineFiniteSum, FiniteSumOperator, SaddleFiniteSum
from .resolvents import l1_map, product_map, simplex_map

__all__ = [
    "QuadraticMinimaxInstance",
    "gen_quadratic_minimax",
    "WganInstance",
    "gen_wgan",
    "LogisticAmbiguousInstance",
    "gen_logistic_ambiguous",
    "gen_synthetic_classification",
    "LogisticAmbiguousOperator",
    "CoHypomonotoneInstance",
    "co_hypomonotone_instance",
    "parse_libsvm",
    "write_libsvm",
    "libsvm_to_dense",
    "normalize_and_add_bias",
    "ParseError",
    "save_instance",
    "load_instance",
]

GENERATOR_VERSION = "1"


# ---------------------------------------------------------------------------
# quadratic minimax
# ---------------------------------------------------------------------------

@dataclass
class QuadraticMinimaxInstance:
    """Finite sum of quadratic saddle components with eigenvalues clipped from
    below, so the blocks are symmetric but generally not PSD."""

    n: int
    p1: int
    p2: int
    A: np.ndarray          # (n, p1, p1) symmetric
    B: np.ndarray          # (n, p2, p2) symmetric
    L_cross: np.ndarray    # (n, p1, p2)
    b: np.ndarray          # (n, p1)
    c: np.ndarray          # (n, p2)
    clip: float
    seed: int

    @property
    def p(self):
        return self.p1 + self.p2

    def component_matrix(self, i):
        """Block matrix [[A_i, L_i], [-L_i^T, B_i]]."""
        p1, p = self.p1, self.p
        M = np.zeros((p, p))
        M[:p1, :p1] = self.A[i]
        M[:p1, p1:] = self.L_cross[i]
        M[p1:, :p1] = -self.L_cross[i].T
        M[p1:, p1:] = self.B[i]
        return M

    def to_operator(self):
        mats = np.stack([self.component_matrix(i) for i in range(self.n)])
        offsets = np.concatenate([self.b, self.c], axis=1)
        return AffineFiniteSum(mats, offsets)

    def saddle_operator(self):
        """Same field expressed through gradient oracles of the couplings
        H_i(u, v) = 0.5 u'A_i u + u'L_i v - 0.5 v'B_i v + b_i'u - c_i'v."""
        def grad_u(i, u, v):
            return self.A[i] @ u + self.L_cross[i] @ v + self.b[i]

        def grad_v(i, u, v):
            return self.L_cross[i].T @ u - self.B[i] @ v - self.c[i]

        return SaddleFiniteSum(self.n, self.p1, self.p2, grad_u, grad_v)

    def simplex_constraint(self):
        """Product map restricting u and v to their unit simplices."""
        return product_map([(simplex_map(), slice(0, self.p1)),
                            (simplex_map(), slice(self.p1, self.p))])


def _clipped_symmetric(rng, dim, clip):
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    D = np.maximum(rng.standard_normal(dim), clip)
    return (Q * D) @ Q.T


def gen_quadratic_minimax(n, p1, p2, seed, clip=-0.1):
    """Generate the clipped-spectrum quadratic minimax family.

    Each A_i (and B_i) is Q_i D_i Q_i' with orthonormal Q_i and standard
    normal diagonal entries clipped from below at ``clip``; couplings and
    offsets are standard normal.
    """
    rng = RngStream(seed, tag=1)
    A = np.stack([_clipped_symmetric(rng, p1, clip) for _ in range(n)])
    B = np.stack([_clipped_symmetric(rng, p2, clip) for _ in range(n)])
    L_cross = rng.standard_normal((n, p1, p2))
    b = rng.standard_normal((n, p1))
    c = rng.standard_normal((n, p2))
    inst = QuadraticMinimaxInstance(n, p1, p2, A, B, L_cross, b, c, clip, seed)
    return inst, inst.to_operator()


# ---------------------------------------------------------------------------
# synthetic WGAN bilinear game
# ---------------------------------------------------------------------------

@dataclass
class WganInstance:
    """Bilinear game from the additive-generator / linear-discriminator toy
    model: components G_i[theta; beta] = -[K beta; K'(w_i - z_i - theta)]."""

    n: int
    p1: int
    p2: int
    K: np.ndarray          # (p1, p2), normalized to unit spectral norm if random
    w: np.ndarray          # (n, p1) samples around theta_star
    z: np.ndarray          # (n, p1) generator noise samples
    theta_star: np.ndarray
    k_mode: str
    seed: int

    @property
    def p(self):
        return self.p1 + self.p2

    def to_operator(self):
        p1, p2, p = self.p1, self.p2, self.p
        M = np.zeros((p, p))
        M[:p1, p1:] = -self.K
        M[p1:, :p1] = self.K.T
        mats = np.broadcast_to(M, (self.n, p, p)).copy()
        offsets = np.zeros((self.n, p))
        offsets[:, p1:] = -(self.w - self.z) @ self.K
        return AffineFiniteSum(mats, offsets, lipschitz=float(np.linalg.norm(self.K, 2)))

    def root(self):
        """Unique root [mean(w - z); 0] in identity mode."""
        if self.k_mode != "identity":
            raise ValueError("closed-form root is only available for K = I")
        return np.concatenate([(self.w - self.z).mean(axis=0), np.zeros(self.p2)])


def gen_wgan(n, p1, p2, seed, k_mode="identity"):
    """Generate the synthetic WGAN instance: w_i ~ N(theta*, I), z_i ~ N(0, I).

    ``k_mode="identity"`` uses K = I (requires p1 == p2, known root);
    ``"random"`` draws K standard normal and normalizes it to unit spectral
    norm so the averaged Lipschitz constant is exactly 1.
    """
    rng = RngStream(seed, tag=2)
    theta_star = rng.standard_normal(p1)
    w = theta_star + rng.standard_normal((n, p1))
    z = rng.standard_normal((n, p1))  # lives with theta: the model is theta + z
    if k_mode == "identity":
        if p1 != p2:
            raise ValueError("identity coupling needs p1 == p2")
        K = np.eye(p1)
    elif k_mode == "random":
        K = rng.standard_normal((p1, p2))
        K = K / np.linalg.norm(K, 2)
    else:
        raise ValueError(f"unknown k_mode {k_mode!r}")
    inst = WganInstance(n, p1, p2, K, w, z, theta_star, k_mode, seed)
    return inst, inst.to_operator()


# ---------------------------------------------------------------------------
# logistic regression with ambiguous features
# ---------------------------------------------------------------------------

def logistic_loss(t, s):
    """log(1 + exp(t)) - s*t, evaluated stably."""
    return np.logaddexp(0.0, t) - s * t


def logistic_dloss(t, s):
    """sigmoid(t) - s."""
    return expit(t) - s


@dataclass
class LogisticAmbiguousInstance:
    """Worst-case logistic regression over m ambiguous copies of each feature
    vector, with an l1 weight penalty and a simplex-constrained mixture."""

    N: int
    d: int                  # feature width including the bias column
    m: int
    X: np.ndarray           # (N, m, d) ambiguous features, bias column last
    y: np.ndarray           # (N,) labels in {0, 1}
    reg: float
    noise_var: float
    seed: int
    nominal: np.ndarray = field(repr=False, default=None)  # (N, d) pre-noise

    @property
    def p(self):
        return self.d + self.m

    def to_operator(self):
        return LogisticAmbiguousOperator(self)

    def constraint_map(self):
        """Product of the weighted-l1 map on the w block and the simplex
        indicator on the mixture block."""
        return product_map([(l1_map(self.reg), slice(0, self.d)),
                            (simplex_map(), slice(self.d, self.p))])

    def surrogate_lipschitz(self):
        """Spectral norm of the nominal feature matrix, the practical stand-in
        for the unavailable closed-form constant."""
        return float(np.linalg.norm(self.nominal, 2))


class LogisticAmbiguousOperator(FiniteSumOperator):
    """Components over x = [w; z]:

        block w: sum_j z_j * dloss(<X_ij, w>, y_i) * X_ij
        block z: -loss(<X_ij, w>, y_i) per ambiguous copy j
    """

    def __init__(self, inst):
        self.inst = inst
        self.n = inst.N
        self.p = inst.d + inst.m
        self.lipschitz = None

    def _split(self, x):
        return x[: self.inst.d], x[self.inst.d:]

    def _component(self, i, x):
        w, z = self._split(x)
        inst = self.inst
        t = inst.X[i] @ w                      # (m,)
        dl = logistic_dloss(t, inst.y[i])
        top = (z * dl) @ inst.X[i]
        bottom = -logistic_loss(t, inst.y[i])
        return np.concatenate([top, bottom])

    def _batch(self, idx, x):
        w, z = self._split(x)
        inst = self.inst
        Xb = inst.X[idx]                       # (k, m, d)
        t = Xb @ w                             # (k, m)
        yb = inst.y[idx][:, None]
        dl = expit(t) - yb
        top = np.einsum("km,kmd->kd", z * dl, Xb)
        bottom = -(np.logaddexp(0.0, t) - yb * t)
        return np.concatenate([top, bottom], axis=1)


def gen_synthetic_classification(N, d, seed):
    """Small synthetic binary-classification data in dense (features, labels)
    form, for desk runs without external files."""
    rng = RngStream(seed, tag=3)
    X = rng.standard_normal((N, d))
    w_true = rng.standard_normal(d)
    prob = expit(X @ w_true)
    y = (rng.uniform(size=N) < prob).astype(np.float64)
    return X, y


def gen_logistic_ambiguous(features, labels, m, reg, noise_var, seed):
    """Build the ambiguous-feature instance from dense nominal data.

    Columns are normalized to unit norm, a bias column of ones is appended,
    and each sample gets m ambiguous copies by adding N(0, noise_var) noise
    to the feature columns (the bias column stays exactly one).
    """
    X = np.asarray(features, dtype=np.float64)
    y = as_vec(labels, name="labels")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise ValueError("labels must be encoded in {0, 1}")
    if m < 1:
        raise ValueError("need at least one ambiguous copy")
    if reg <= 0:
        raise ValueError("regularization weight must be positive")
    nominal = normalize_and_add_bias(X)
    N, d = nominal.shape
    rng = RngStream(seed, tag=4)
    noise = np.sqrt(noise_var) * rng.standard_normal((N, m, d - 1))
    amb = np.empty((N, m, d))
    amb[:, :, : d - 1] = nominal[:, None, : d - 1] + noise
    amb[:, :, d - 1] = 1.0
    inst = LogisticAmbiguousInstance(N, d, m, amb, y, reg, noise_var, seed,
                                     nominal=nominal)
    return inst, inst.to_operator(), inst.constraint_map()


# ---------------------------------------------------------------------------
# 2x2 nonmonotone verification instance
# ---------------------------------------------------------------------------

@dataclass
class CoHypomonotoneInstance:
    """Rotation-plus-damping pair: G x = Gmat x + g with the planar rotation
    Gmat = [[0, 1], [-1, 0]], T x = [[-eps, 0], [0, 0]] x, kappa = eps.

    The sum is nonmonotone for eps > 0 (its symmetric part has eigenvalue
    -eps) yet kappa-co-hypomonotone, certified by the PSD matrix
    0.5(T + T') + kappa (G + T)'(G + T); eps -> 0 recovers the monotone
    rotation. This is the skew reading of the printed example: the symmetric
    variant fails its own certificate and diverges under every solver here.
    """

    eps: float
    Gmat: np.ndarray
    Tmat: np.ndarray
    g: np.ndarray
    kappa: float

    @property
    def sum_matrix(self):
        return self.Gmat + self.Tmat

    def certificate_matrix(self, kappa=None):
        """0.5(G+G'+T+T') + kappa (G+T)'(G+T); PSD iff the affine pair is
        kappa-co-hypomonotone."""
        k = self.kappa if kappa is None else kappa
        A = self.sum_matrix
        return 0.5 * (self.Gmat + self.Gmat.T + self.Tmat + self.Tmat.T) + k * A.T @ A

    def reduced_certificate(self, kappa=None):
        """0.5(T+T') + kappa (G+T)'(G+T), the form with the rotation's (zero)
        symmetric part dropped."""
        k = self.kappa if kappa is None else kappa
        A = self.sum_matrix
        return 0.5 * (self.Tmat + self.Tmat.T) + k * A.T @ A

    @property
    def nonmonotone(self):
        sym = 0.5 * (self.sum_matrix + self.sum_matrix.T)
        return bool(np.linalg.eigvalsh(sym).min() < 0)

    def root(self):
        return np.linalg.solve(self.sum_matrix, -self.g)

    def to_operator(self):
        return AffineFiniteSum(self.Gmat[None, :, :], self.g[None, :],
                               lipschitz=float(np.linalg.norm(self.Gmat, 2)))


def co_hypomonotone_instance(eps, g=None):
    """Analytic 2x2 instance with a nonmonotone sum and certificate kappa = eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    Gmat = np.array([[0.0, 1.0], [-1.0, 0.0]])
    Tmat = np.array([[-eps, 0.0], [0.0, 0.0]])
    g = np.zeros(2) if g is None else as_vec(g, 2, "g")
    return CoHypomonotoneInstance(eps, Gmat, Tmat, g, kappa=eps)


# ---------------------------------------------------------------------------
# LIBSVM ingestion
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    """Malformed LIBSVM input; message carries the line number."""


def parse_libsvm(path):
    """Parse ``label idx:val ...`` lines (1-based, strictly increasing indices).

    Returns (rows, labels, num_features) where each row is a pair of sorted
    0-based index and value arrays and labels are mapped to {0, 1} (-1 -> 0).
    """
    rows = []
    labels = []
    num_features = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                lab = float(parts[0])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad label {parts[0]!r}") from exc
            labels.append(0.0 if lab <= 0 else 1.0)
            idx = []
            val = []
            prev = 0
            for tok in parts[1:]:
                i_s, _, v_s = tok.partition(":")
                try:
                    i = int(i_s)
                    v = float(v_s)
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: bad token {tok!r}") from exc
                if i <= prev:
                    raise ParseError(
                        f"line {lineno}: indices must be strictly increasing "
                        f"(saw {i} after {prev})")
                prev = i
                idx.append(i - 1)
                val.append(v)
            rows.append((np.array(idx, dtype=np.int64),
                         np.array(val, dtype=np.float64)))
            if idx:
                num_features = max(num_features, idx[-1] + 1)
    if not rows:
        raise ParseError("empty file")
    return rows, np.array(labels), num_features


def write_libsvm(path, rows, labels):
    """Inverse of :func:`parse_libsvm` (1-based indices, {0,1} -> {-1,+1})."""
    with open(path, "w") as fh:
        for (idx, val), lab in zip(rows, labels):
            toks = [("+1" if lab > 0 else "-1")]
            toks += [f"{i + 1}:{v:.17g}" for i, v in zip(idx, val)]
            fh.write(" ".join(toks) + "\n")


def libsvm_to_dense(rows, num_features):
    """Densify parsed sparse rows into an (N, num_features) array."""
    X = np.zeros((len(rows), num_features))
    for r, (idx, val) in enumerate(rows):
        X[r, idx] = val
    return X


def normalize_and_add_bias(X):
    """Normalize nonzero columns to unit norm and append a column of ones."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=0)
    norms[norms == 0] = 1.0
    return np.hstack([X / norms, np.ones((X.shape[0], 1))])


# Shapes reported for the two reference datasets: (features incl. bias, samples).
LIBSVM_REFERENCE_SHAPES = {"a9a": (134, 3561), "w8a": (311, 45546)}


# ---------------------------------------------------------------------------
# instance containers
# ---------------------------------------------------------------------------

def save_instance(path, kind, seed, arrays, params=None):
    """Write a self-describing instance container (.npz with embedded
    generator metadata)."""
    meta = dict(kind=kind, seed=int(seed), generator_version=GENERATOR_VERSION)
    if params:
        meta.update(params)
    np.savez(path, __meta__=np.array([json.dumps(meta)]), **arrays)


def load_instance(path):
    """Read back a container written by :func:`save_instance`."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"][0]))
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    return meta, arrays

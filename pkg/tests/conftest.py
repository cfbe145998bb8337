"""Shared builders and independent oracles for the test suite."""

import itertools

import numpy as np

from vrsplit.core import RngStream
from vrsplit.estimators import LsvrgEstimator, SagaEstimator
from vrsplit.operators import AffineFiniteSum


def random_affine(n, p, seed, scale=1.0):
    """Random affine finite sum with standard-normal matrices and offsets."""
    rng = RngStream(seed, tag=100)
    mats = scale * rng.standard_normal((n, p, p))
    offs = scale * rng.standard_normal((n, p))
    return AffineFiniteSum(mats, offs)


def monotone_affine(n, p, seed, strength=0.5):
    """Affine finite sum whose mean matrix has a PSD symmetric part.

    Components are noisy copies of a fixed monotone matrix; the noise sums
    to zero so the mean is exactly the monotone part.
    """
    rng = RngStream(seed, tag=101)
    sym_root = rng.standard_normal((p, p))
    sym = strength * ((sym_root @ sym_root.T) / p + 0.4 * np.eye(p))
    skew_root = rng.standard_normal((p, p))
    skew = 0.5 * (skew_root - skew_root.T)
    base = sym + skew
    noise = rng.standard_normal((n, p, p))
    noise -= noise.mean(axis=0)
    offs = rng.standard_normal((n, p))
    return AffineFiniteSum(base[None] + noise, offs)


def lsvrg_with_state(op, gamma, b, p_coin, rng):
    """L-SVRG estimator with a randomized (consistent) snapshot state."""
    est = LsvrgEstimator(op, gamma, b, p_coin)
    est.w = rng.standard_normal(op.p)
    est.gw = op.full(est.w)
    return est


def saga_with_state(op, gamma, b, rng):
    """SAGA estimator with an arbitrary table."""
    est = SagaEstimator(op, gamma, b)
    est.table = rng.standard_normal((op.n, op.p))
    est.table_mean = est.table.mean(axis=0)
    return est


def simplex_projection_oracle(y):
    """Brute-force simplex projection: minimize over all candidate supports.

    Feasible only for small dimensions; used to check the sort-based method.
    """
    y = np.asarray(y, dtype=float)
    d = y.size
    best, best_dist = None, np.inf
    for r in range(1, d + 1):
        for support in itertools.combinations(range(d), r):
            x = np.zeros(d)
            s = list(support)
            shift = (y[s].sum() - 1.0) / r
            cand = y[s] - shift
            if np.any(cand < -1e-12):
                continue
            x[s] = np.maximum(cand, 0.0)
            dist = np.linalg.norm(x - y)
            if dist < best_dist:
                best, best_dist = x, dist
    return best

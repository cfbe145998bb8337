"""Finite-sum operators G = (1/n) sum_i G_i and Lipschitz-constant estimation.

Operators are read-only after construction; oracle accounting is carried by
an explicit per-run counter passed into the evaluation methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, RngStream

__all__ = [
    "FiniteSumOperator",
    "AffineFiniteSum",
    "SaddleFiniteSum",
    "CallableFiniteSum",
    "LipschitzEstimate",
    "averaged_lipschitz",
    "power_iteration",
    "PowerIterationError",
]


class FiniteSumOperator:
    """Base class: n component maps R^p -> R^p averaged into G.

    Subclasses implement :meth:`_component`; vectorized batch evaluation and
    closed-form full evaluation may be overridden for speed, but must agree
    with plain component averaging to float64 accumulation accuracy.
    """

    n: int
    p: int
    lipschitz: float | None = None

    def _component(self, i, x):
        raise NotImplementedError

    def _check_x(self, x):
        if x.shape != (self.p,):
            raise DimensionMismatch(f"expected vector of length {self.p}, got {x.shape}")

    def component(self, i, x, counter=None):
        """Evaluate G_i x; counts one component evaluation."""
        if not (0 <= i < self.n):
            raise IndexError(f"component index {i} out of range [0, {self.n})")
        self._check_x(x)
        if counter is not None:
            counter.add_components(1)
        return self._component(i, x)

    def batch_components(self, idx, x, counter=None):
        """Stack of component values G_i x for i in idx, shape (len(idx), p)."""
        self._check_x(x)
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty batch")
        if counter is not None:
            counter.add_components(idx.size)
        return self._batch(idx, x)

    def _batch(self, idx, x):
        return np.stack([self._component(int(i), x) for i in idx])

    def minibatch(self, idx, x, counter=None):
        """Mini-batch average (1/|B|) sum_{i in B} G_i x, multiplicities kept."""
        return self.batch_components(idx, x, counter).mean(axis=0)

    def full(self, x, counter=None):
        """Full average G x; counts n component evaluations."""
        self._check_x(x)
        if counter is not None:
            counter.add_components(self.n)
        return self._full(x)

    def _full(self, x):
        return self._batch(np.arange(self.n), x).mean(axis=0)


class AffineFiniteSum(FiniteSumOperator):
    """Components G_i x = M_i x + g_i with per-component matrices and offsets."""

    def __init__(self, mats, offsets, lipschitz=None):
        mats = np.asarray(mats, dtype=np.float64)
        offsets = np.asarray(offsets, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionMismatch(f"mats must be (n, p, p), got {mats.shape}")
        if offsets.shape != mats.shape[:2]:
            raise DimensionMismatch("offsets must be (n, p) matching mats")
        self.mats = mats
        self.offsets = offsets
        self.n, self.p = offsets.shape
        self.mean_mat = mats.mean(axis=0)
        self.mean_offset = offsets.mean(axis=0)
        self.lipschitz = lipschitz

    def _component(self, i, x):
        return self.mats[i] @ x + self.offsets[i]

    def _batch(self, idx, x):
        return self.mats[idx] @ x + self.offsets[idx]

    def _full(self, x):
        return self.mean_mat @ x + self.mean_offset

    def gram_mean(self):
        """(1/n) sum_i M_i^T M_i, the PSD matrix whose top eigenvalue is L^2."""
        return np.einsum("ikj,ikl->jl", self.mats, self.mats) / self.n


class SaddleFiniteSum(FiniteSumOperator):
    """Minimax field built from per-component gradient oracles of a smooth
    coupling H_i(u, v): output is [grad_u H_i; -grad_v H_i]."""

    def __init__(self, n, p1, p2, grad_u, grad_v, lipschitz=None):
        self.n = n
        self.p1 = p1
        self.p2 = p2
        self.p = p1 + p2
        self.grad_u = grad_u
        self.grad_v = grad_v
        self.lipschitz = lipschitz

    def _component(self, i, x):
        u, v = x[: self.p1], x[self.p1:]
        gu = self.grad_u(i, u, v)
        gv = self.grad_v(i, u, v)
        return np.concatenate([gu, -gv])


class CallableFiniteSum(FiniteSumOperator):
    """Generic wrapper around a list/indexable family of component callables."""

    def __init__(self, components, p, lipschitz=None):
        self._components = components
        self.n = len(components)
        self.p = p
        self.lipschitz = lipschitz

    def _component(self, i, x):
        return np.asarray(self._components[i](x), dtype=np.float64)


# ---------------------------------------------------------------------------
# Lipschitz estimation
# ---------------------------------------------------------------------------

class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries iterate diagnostics."""


def power_iteration(mat, tol=1e-10, max_iters=10_000):
    """Dominant eigenvalue of a symmetric PSD matrix by power iteration."""
    p = mat.shape[0]
    v = np.ones(p) / np.sqrt(p)
    lam = 0.0
    for it in range(max_iters):
        w = mat @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        v_new = w / nw
        lam_new = float(v_new @ (mat @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new, v_new
        # restart direction if stuck in an invariant subspace
        if it == max_iters // 2 and abs(lam_new - lam) > 1e-2 * max(1.0, abs(lam_new)):
            v_new = v_new + 1e-3 * np.cos(np.arange(p))
            v_new /= np.linalg.norm(v_new)
        lam, v = lam_new, v_new
    raise PowerIterationError(
        f"no convergence after {max_iters} iterations: "
        f"last eigenvalue estimate {lam:.6e}, last change {abs(lam_new - lam):.3e}"
    )


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    method: str  # "exact" (spectral, affine case) or "empirical" (lower bound)


def averaged_lipschitz(op, tol=1e-10, max_iters=10_000, pairs=1000, seed=0):
    """Averaged Lipschitz constant L with (1/n) sum ||G_i x - G_i y||^2 <= L^2 ||x-y||^2.

    Affine operators get the exact value sqrt(lambda_max((1/n) sum M_i^T M_i))
    via power iteration. Anything else gets a sampled lower estimate over
    random unit pairs, flagged "empirical".
    """
    if isinstance(op, AffineFiniteSum):
        lam, _ = power_iteration(op.gram_mean(), tol=tol, max_iters=max_iters)
        return LipschitzEstimate(float(np.sqrt(max(lam, 0.0))), "exact")
    rng = RngStream(seed, tag=2**32 + 7)
    best = 0.0
    for _ in range(pairs):
        x = rng.standard_normal(op.p)
        d = rng.standard_normal(op.p)
        d /= np.linalg.norm(d)
        y = x + d
        gx = op.batch_components(np.arange(op.n), x)
        gy = op.batch_components(np.arange(op.n), y)
        msq = float(np.mean(np.sum((gx - gy) ** 2, axis=1)))
        best = max(best, np.sqrt(msq))
    return LipschitzEstimate(best, "empirical")

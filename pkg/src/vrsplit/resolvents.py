"""Maximal monotone maps exposed through their resolvents J_{lam T}, plus the
projection/prox toolbox the experiment problems need.

Every map is stateless and safe for concurrent use. Indicator kinds ignore
lam (projections are lam-invariant) but the API keeps it for uniformity.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionMismatch

__all__ = [
    "MonotoneMap",
    "zero_map",
    "l1_map",
    "box_map",
    "simplex_map",
    "linear_map",
    "product_map",
    "resolve",
    "element_of_T",
    "project_simplex",
    "project_box",
    "soft_threshold",
]


def soft_threshold(y, t):
    """Componentwise soft threshold by t >= 0 (prox of t * ||.||_1)."""
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


def project_box(y, r):
    """Componentwise clamp onto the l-inf ball [-r, r]^p."""
    if r <= 0:
        raise ValueError(f"box radius must be positive, got {r}")
    return np.clip(y, -r, r)


def project_simplex(y):
    """Euclidean projection onto the unit simplex, sort-and-threshold form.

    The threshold is unique, so no tie-breaking rule is needed even with
    repeated entries; the projection is single-valued.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 1:
        raise DimensionMismatch("simplex projection expects a nonempty vector")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


class MonotoneMap:
    """A map T accessed only through x = J_{lam T}(y) = (I + lam T)^{-1} y.

    ``kind`` is one of zero | l1 | box | simplex | linear | product. Elements
    v in Tx come for free from the resolvent identity v = (y - x) / lam.
    """

    def __init__(self, kind, *, weight=None, radius=None, mat=None, blocks=None):
        self.kind = kind
        self.weight = weight
        self.radius = radius
        self.mat = None if mat is None else np.asarray(mat, dtype=np.float64)
        self.blocks = blocks

    def resolve(self, lam, y, counter=None):
        if lam <= 0:
            raise ValueError(f"resolvent parameter must be positive, got {lam}")
        if counter is not None:
            counter.add_resolvent()
        return self._resolve(lam, np.asarray(y, dtype=np.float64))

    def _resolve(self, lam, y):
        if self.kind == "zero":
            return y.copy()
        if self.kind == "l1":
            return soft_threshold(y, lam * self.weight)
        if self.kind == "box":
            return project_box(y, self.radius)
        if self.kind == "simplex":
            return project_simplex(y)
        if self.kind == "linear":
            A = np.eye(self.mat.shape[0]) + lam * self.mat
            if abs(np.linalg.det(A)) < 1e-300:
                raise np.linalg.LinAlgError(
                    "singular I + lam*T (cannot happen for monotone T)")
            return np.linalg.solve(A, y)
        if self.kind == "product":
            out = np.empty_like(y)
            for sub, sl in self.blocks:
                out[sl] = sub._resolve(lam, y[sl])
            return out
        raise ValueError(f"unknown map kind {self.kind!r}")


def zero_map():
    return MonotoneMap("zero")


def l1_map(weight=1.0):
    if weight < 0:
        raise ValueError("l1 weight must be nonnegative")
    return MonotoneMap("l1", weight=weight)


def box_map(radius):
    if radius <= 0:
        raise ValueError("box radius must be positive")
    return MonotoneMap("box", radius=radius)


def simplex_map():
    return MonotoneMap("simplex")


def linear_map(mat):
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch("linear map needs a square matrix")
    return MonotoneMap("linear", mat=mat)


def product_map(blocks):
    """Blockwise map from (MonotoneMap, slice) pairs partitioning [0, p)."""
    slices = sorted((sl.start, sl.stop) for _, sl in blocks)
    for (a, b), (c, d) in zip(slices, slices[1:]):
        if b != c:
            raise ValueError("product blocks must be disjoint and exhaustive")
    return MonotoneMap("product", blocks=list(blocks))


def resolve(T, lam, y, counter=None):
    """Functional form of the resolvent: the unique x with y in x + lam*Tx."""
    return T.resolve(lam, y, counter)


def element_of_T(T, lam, y, x=None):
    """Element v in Tx realized by the resolvent: v = (y - x)/lam, x + lam v = y."""
    if x is None:
        x = T.resolve(lam, y)
    return (np.asarray(y, dtype=np.float64) - x) / lam

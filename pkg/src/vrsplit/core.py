"""Shared numeric types: vectors, deterministic RNG streams, oracle counters,
and trajectory records with CSV serialization.

All vectors are dense 1-D float64 numpy arrays. External inputs are validated
once at the boundary with :func:`as_vec`; internal code trusts shapes.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DimensionMismatch",
    "ConfigError",
    "as_vec",
    "dot",
    "norm",
    "axpy",
    "RngStream",
    "sample_batch",
    "flip_coin",
    "OracleCounter",
    "TrajectoryRecord",
    "Trajectory",
    "CSV_COLUMNS",
]


class DimensionMismatch(ValueError):
    """Raised when vector/matrix dimensions disagree."""


class ConfigError(ValueError):
    """Raised for invalid solver/estimator/experiment parameters."""


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------

def as_vec(x, dim=None, name="x"):
    """Validate external input as a finite 1-D float64 vector.

    Rejects NaN/Inf entries and, if ``dim`` is given, wrong lengths.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def _check_dims(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def dot(a, b):
    """Euclidean inner product with a hard dimension check."""
    _check_dims(a, b)
    return float(np.dot(a, b))


def norm(a):
    """Euclidean norm."""
    return float(np.linalg.norm(a))


def axpy(alpha, x, y):
    """Return ``alpha * x + y``."""
    _check_dims(x, y)
    return alpha * x + y


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

RNG_ALGORITHM = "philox4x64"


class RngStream:
    """Deterministic counter-based random stream (Philox).

    Identical ``(seed, tag)`` reproduces identical batch/coin/noise sequences
    on every platform, independent of scheduling, which is what makes
    multi-seed sweeps reproducible.
    """

    def __init__(self, seed, tag=0):
        self.seed = int(seed)
        self.tag = int(tag)
        self.algorithm = RNG_ALGORITHM
        self._gen = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.tag], dtype=np.uint64))
        )

    def spawn(self, tag):
        """Independent stream derived from the same seed."""
        return RngStream(self.seed, tag)

    def sample_batch(self, n, b):
        """Draw ``b`` indices i.i.d. uniformly *with replacement* from [0, n)."""
        if not (1 <= b <= n):
            raise ConfigError(f"batch size must satisfy 1 <= b <= n, got b={b}, n={n}")
        return self._gen.integers(0, n, size=b, dtype=np.int64)

    def flip_coin(self, p):
        """Bernoulli(p) draw; p must lie strictly inside (0, 1)."""
        if not (0.0 < p < 1.0):
            raise ConfigError(f"coin probability must be in (0, 1), got {p}")
        return bool(self._gen.random() < p)

    def standard_normal(self, shape=None):
        return self._gen.standard_normal(shape)

    def integers(self, n, size):
        """Bulk uniform indices in [0, n), without the batch-size contract."""
        return self._gen.integers(0, n, size=size, dtype=np.int64)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)


def sample_batch(rng, n, b):
    """Functional alias for :meth:`RngStream.sample_batch`."""
    return rng.sample_batch(n, b)


def flip_coin(rng, p):
    """Functional alias for :meth:`RngStream.flip_coin`."""
    return rng.flip_coin(p)


# ---------------------------------------------------------------------------
# oracle accounting
# ---------------------------------------------------------------------------

@dataclass
class OracleCounter:
    """Counts of oracle work done by one solver run.

    ``component_evals`` is the epoch-defining count: it includes table-refresh
    credits so that a SAGA iteration costs 3b like its SVRG counterpart.
    ``fresh_evals`` counts only actually computed components (SAGA pays 2b
    fresh per iteration, reusing the batch values to refresh its table).
    Metric evaluations (residual norms) are never counted.
    """

    component_evals: int = 0
    fresh_evals: int = 0
    resolvent_evals: int = 0

    def add_components(self, k):
        self.component_evals += k
        self.fresh_evals += k

    def add_reused(self, k):
        self.component_evals += k

    def add_resolvent(self, k=1):
        self.resolvent_evals += k

    def epochs(self, n):
        return self.component_evals / n


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("iter", "epochs", "residual", "rel_residual", "step_norm",
               "lyapunov", "seed")


@dataclass
class TrajectoryRecord:
    iter: int
    epochs: float
    residual: float
    rel_residual: float
    step_norm: float
    lyapunov: float | None = None


@dataclass
class Trajectory:
    """Per-run record stream plus the resolved config it was produced under."""

    config: dict
    seed: int
    records: list[TrajectoryRecord] = field(default_factory=list)
    diverged: bool = False

    def append(self, rec):
        if self.records:
            last = self.records[-1]
            if rec.epochs <= last.epochs:
                raise ValueError("epochs must be strictly increasing across records")
        if rec.residual < 0:
            raise ValueError("residual must be nonnegative")
        self.records.append(rec)

    def column(self, name):
        vals = [getattr(r, name) for r in self.records]
        if name == "lyapunov":
            return np.array([math.nan if v is None else v for v in vals])
        return np.array(vals, dtype=float)

    # -- CSV -------------------------------------------------------------

    def config_hash(self):
        blob = json.dumps(self.config, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# config: {json.dumps(self.config, sort_keys=True)}\n")
        buf.write(f"# config_hash: {self.config_hash()}\n")
        buf.write(f"# diverged: {self.diverged}\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.records:
            lya = "" if r.lyapunov is None else f"{r.lyapunov:.17g}"
            buf.write(
                f"{r.iter},{r.epochs:.17g},{r.residual:.17g},"
                f"{r.rel_residual:.17g},{r.step_norm:.17g},{lya},{self.seed}\n"
            )
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def read_trajectory_csv(path):
    """Read a trajectory CSV back into column arrays plus header metadata.

    Returns ``(columns, meta)`` where columns maps each schema column to a
    float array (lyapunov is NaN where empty) and meta holds the parsed
    ``#``-comment entries.
    """
    meta = {}
    rows = []
    with open(path) as fh:
        header = None
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                missing = [c for c in CSV_COLUMNS if c not in header]
                if missing:
                    raise ValueError(f"{path}:{lineno}: missing columns {missing}")
                continue
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: empty trajectory file")
    cols = {}
    for name in header:
        j = header.index(name)
        vals = []
        for row in rows:
            cell = row[j]
            vals.append(math.nan if cell == "" else float(cell))
        cols[name] = np.array(vals)
    return cols, meta

"""Render convergence figures from solver trajectory CSV files.

Input files follow the trajectory schema
``iter,epochs,residual,rel_residual,step_norm,lyapunov,seed`` with optional
``#``-comment metadata lines. Files are grouped by algorithm (taken from the
embedded config, the ``# algorithm`` comment, or the
``problem__algorithm__seedNNN.csv`` filename convention); each group gets one
mean curve plus a translucent min/max envelope over its seeds.

This package is intentionally decoupled from the solver library: the CSV
contract is the only interface.
"""

from __future__ import annotations

import argparse
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

REQUIRED_COLUMNS = ("iter", "epochs", "residual", "rel_residual", "step_norm",
                    "lyapunov", "seed")


class SchemaError(ValueError):
    """CSV does not match the trajectory schema; message lists the columns."""


@dataclass
class PlotSpec:
    inputs: list[str]
    out_path: str
    log_y: bool = True
    title: str | None = None
    labels: dict = field(default_factory=dict)  # algorithm -> legend label


def read_csv(path):
    """Parse one trajectory CSV into (columns, meta)."""
    meta = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                missing = [c for c in REQUIRED_COLUMNS if c not in header]
                if missing:
                    raise SchemaError(
                        f"{path}: missing required columns {missing} "
                        f"(found {header})")
                continue
            rows.append(line.split(","))
    if header is None or not rows:
        raise SchemaError(f"{path}: no data rows")
    cols = {}
    for j, name in enumerate(header):
        vals = [math.nan if r[j] == "" else float(r[j]) for r in rows]
        cols[name] = np.array(vals)
    return cols, meta


def algorithm_of(path, meta):
    """Best-effort algorithm tag for grouping."""
    if "config" in meta:
        try:
            blob = json.loads(meta["config"])
            if "algorithm" in blob:
                return str(blob["algorithm"])
        except json.JSONDecodeError:
            pass
    if "algorithm" in meta:
        return meta["algorithm"]
    stem = os.path.basename(path)
    parts = stem.split("__")
    if len(parts) >= 2:
        return parts[1]
    return stem


def render(spec):
    """Render one figure: per-algorithm mean curve plus min/max envelope.

    Returns the matplotlib figure after writing it to ``spec.out_path``.
    """
    if not spec.inputs:
        raise SchemaError("no input CSV files given")
    groups = {}
    for path in spec.inputs:
        cols, meta = read_csv(path)
        groups.setdefault(algorithm_of(path, meta), []).append(cols)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for algo in sorted(groups):
        runs = groups[algo]
        base = runs[0]["iter"]
        for r in runs[1:]:
            if r["iter"].shape != base.shape or not np.array_equal(r["iter"], base):
                raise SchemaError(
                    f"algorithm {algo!r}: seed files have misaligned grids")
        epochs = np.mean([r["epochs"] for r in runs], axis=0)
        rel = np.stack([r["rel_residual"] for r in runs])
        label = spec.labels.get(algo, algo)
        line, = ax.plot(epochs, rel.mean(axis=0), label=label, linewidth=1.6)
        if len(runs) > 1:
            ax.fill_between(epochs, rel.min(axis=0), rel.max(axis=0),
                            color=line.get_color(), alpha=0.2, linewidth=0)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("epochs")
    ax.set_ylabel("relative residual")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    return fig


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="vrsplit-plot",
        description="Render convergence figures from trajectory CSV files")
    ap.add_argument("inputs", nargs="+", help="per-seed trajectory CSV files")
    ap.add_argument("--out", required=True, help="output image (png/svg/pdf)")
    ap.add_argument("--linear-y", action="store_true",
                    help="linear instead of log y axis")
    ap.add_argument("--title")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = PlotSpec(inputs=args.inputs, out_path=args.out,
                    log_y=not args.linear_y, title=args.title)
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}")
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

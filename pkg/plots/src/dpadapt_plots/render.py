"""Render charts from the experiment aggregate CSV.

One chart per metric: the metric mean versus the target sample size n,
one error-bar line per (algorithm, epsilon) group.  Line styles identify
the algorithm family (solid = single-stage, dotted = mirror descent,
dashed = Frank-Wolfe); SVG output is byte-stable across runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

AGG_COLUMNS = ["algorithm", "n", "epsilon", "metric", "mean", "std", "count"]

METRIC_LABELS = {
    "spectral_norm": "spectral norm",
    "test_mse": "test MSE",
}

LINE_STYLES = {
    "single-stage": "solid",
    "two-stage-md": "dotted",
    "two-stage-fw": "dashed",
    "public-only": "dashdot",
    "oracle-private": (0, (3, 1, 1, 1)),
}

# rc settings that make repeated renders byte-identical
_STABLE_RC = {
    "svg.hashsalt": "dpadapt-plots",
    "svg.fonttype": "path",
}


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class PlotSpec:
    csv_path: Path
    out_path: Path
    metric: str

    def __post_init__(self):
        if self.metric not in METRIC_LABELS:
            raise RenderError(
                f"unknown metric {self.metric!r}; expected one of "
                + ", ".join(sorted(METRIC_LABELS)))


def load_aggregate(path) -> list[dict]:
    """Read the aggregate CSV, enforcing the exact column set."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise RenderError(f"{path}: empty file, expected a header row")
            if header != AGG_COLUMNS:
                missing = [c for c in AGG_COLUMNS if c not in header]
                extra = [c for c in header if c not in AGG_COLUMNS]
                parts = [f"{path}: column mismatch"]
                if missing:
                    parts.append("missing: " + ", ".join(missing))
                if extra:
                    parts.append("unexpected: " + ", ".join(extra))
                if not missing and not extra:
                    parts.append("wrong order: " + ", ".join(header))
                raise RenderError("; ".join(parts))
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(AGG_COLUMNS):
                    raise RenderError(f"{path}:{lineno}: expected "
                                      f"{len(AGG_COLUMNS)} fields, got {len(rec)}")
                try:
                    rows.append({
                        "algorithm": rec[0],
                        "n": int(rec[1]),
                        "epsilon": rec[2],
                        "metric": rec[3],
                        "mean": float(rec[4]),
                        "std": float(rec[5]),
                        "count": int(rec[6]),
                    })
                except ValueError as e:
                    raise RenderError(f"{path}:{lineno}: {e}")
    except OSError as e:
        raise RenderError(f"{path}: {e.strerror or e}")
    return rows


def _eps_sort_key(eps: str) -> float:
    try:
        return float(eps)
    except ValueError:
        return math.inf


def render(spec: PlotSpec) -> Path:
    """Render one metric chart; returns the output path.

    All validation happens before anything touches the output path, so a
    failed render never leaves a file behind.
    """
    rows = [r for r in load_aggregate(spec.csv_path) if r["metric"] == spec.metric]
    if not rows:
        raise RenderError(
            f"{spec.csv_path}: no rows with metric {spec.metric!r}")

    groups: dict = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["epsilon"]), []).append(r)

    with plt.rc_context(_STABLE_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for (alg, eps), recs in sorted(
                groups.items(), key=lambda kv: (kv[0][0], _eps_sort_key(kv[0][1]))):
            recs = sorted(recs, key=lambda r: r["n"])
            ax.errorbar(
                [r["n"] for r in recs],
                [r["mean"] for r in recs],
                yerr=[r["std"] for r in recs],
                label=f"{alg}, ε={eps}",
                linestyle=LINE_STYLES.get(alg, "solid"),
                marker="o", markersize=3, capsize=2, linewidth=1.2,
            )
        ax.set_xlabel("target sample size n")
        ax.set_ylabel(METRIC_LABELS[spec.metric])
        ax.legend(fontsize=7)
        fig.tight_layout()
        out = Path(spec.out_path)
        if out.suffix.lower() == ".svg":
            fig.savefig(out, format="svg", metadata={"Date": None})
        else:
            fig.savefig(out)
        plt.close(fig)
    return out

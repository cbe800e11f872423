"""Statistical evaluation: projection summaries, band depth, error metrics.

Random-projection reports compare a real and a synthetic data matrix by
projecting both onto shared random directions and recording summary
statistics of the projections; matching scatter along the diagonal means
both marginals and dependence are captured.  Band depth orders a family
of curves by centrality; error metrics reduce prediction differences to
mean bias and mean absolute error plus per-level quantiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng

PROJECTION_STATISTICS = ("mean", "variance", "std", "q10", "q50", "q90")


@dataclass(frozen=True)
class ProjectionReport:
    """Per statistic: (iterations,) arrays of real and synthetic values."""

    stats: dict
    iterations: int
    seed: int

    def pairs(self, name: str):
        return self.stats[name]


@dataclass(frozen=True)
class DepthRanking:
    """Band depths with the descending-depth ordering and centrality groups."""

    depths: np.ndarray
    order: np.ndarray        # curve indices, deepest first
    groups: dict             # "central" / "middle" / "outer" -> index arrays

    @property
    def median_index(self) -> int:
        return int(self.order[0])


@dataclass(frozen=True)
class ErrorMetrics:
    mb: float
    mae: float
    level_quantiles: np.ndarray  # (n_levels, 3): q10, q50, q90 of the error
    quantile_probs: tuple = (0.1, 0.5, 0.9)


def _matrix(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def _summaries(p: np.ndarray) -> dict:
    return {
        "mean": float(p.mean()),
        "variance": float(p.var(ddof=1)),
        "std": float(p.std(ddof=1)),
        "q10": float(np.quantile(p, 0.10)),
        "q50": float(np.quantile(p, 0.50)),
        "q90": float(np.quantile(p, 0.90)),
    }


def random_projection_report(real, synth, iters: int = 100, seed: int = 0) -> ProjectionReport:
    """Project both matrices onto shared standard-normal directions.

    Per iteration one weight vector is drawn and applied to both
    matrices; the report records each summary statistic of the two
    projection vectors as an (s_real, s_synth) pair.
    """
    real = _matrix(real)
    synth = _matrix(synth)
    if real.shape[1] != synth.shape[1]:
        raise ValueError(f"column counts differ: {real.shape[1]} vs {synth.shape[1]}")
    if iters < 1:
        raise ValueError("iteration count must be >= 1")
    gen = rng.stream(seed)
    acc = {name: ([], []) for name in PROJECTION_STATISTICS}
    for _ in range(iters):
        w = rng.normals(gen, real.shape[1])
        s_real = _summaries(real @ w)
        s_synth = _summaries(synth @ w)
        for name in PROJECTION_STATISTICS:
            acc[name][0].append(s_real[name])
            acc[name][1].append(s_synth[name])
    stats = {name: (np.array(a), np.array(b)) for name, (a, b) in acc.items()}
    return ProjectionReport(stats, iters, seed)


def band_depth(curves) -> np.ndarray:
    """Two-curve band depth with closed inequalities.

    BD(f) is the fraction of curve pairs {i, j} whose pointwise envelope
    contains f everywhere; a curve is inside every band it bounds.
    """
    a = _matrix(curves)
    if a.ndim != 2:
        raise ValueError("curves must form a 2-dimensional array")
    n = a.shape[0]
    if n < 3:
        raise ValueError("band depth needs at least 3 curves")
    n_pairs = n * (n - 1) // 2
    depths = np.empty(n)
    for k in range(n):
        below = (a < a[k]).astype(np.float64)   # strictly below f_k somewhere
        above = (a > a[k]).astype(np.float64)
        # Pair (i, j) fails iff both run strictly below (or above) f_k at some t.
        bad = ((below @ below.T) > 0.0) | ((above @ above.T) > 0.0)
        n_bad = (np.count_nonzero(bad) - np.count_nonzero(np.diag(bad))) // 2
        depths[k] = (n_pairs - n_bad) / n_pairs
    return depths


def depth_groups(depths) -> DepthRanking:
    """Sort curves by descending depth and split into centrality groups.

    The deepest ceil(n/4) curves form the central group, the next
    ceil(n/4) the middle group, the rest the outer group; ties break by
    curve index and the single deepest curve is the median profile.
    """
    depths = np.asarray(depths, dtype=float)
    n = depths.shape[0]
    if n == 0:
        raise ValueError("no depths to group")
    order = np.lexsort((np.arange(n), -depths))
    q = -(-n // 4)  # ceil(n/4)
    groups = {
        "central": order[:q],
        "middle": order[q:2 * q],
        "outer": order[2 * q:],
    }
    return DepthRanking(depths, order, groups)


def error_metrics(y_true, y_pred) -> ErrorMetrics:
    """Mean bias and mean absolute error of d = y_true - y_pred.

    Both aggregate over every matrix entry; per-level quantiles of d
    support profile plots.
    """
    yt = _matrix(y_true)
    yp = _matrix(y_pred)
    if yt.shape != yp.shape:
        raise ValueError(f"shape mismatch {yt.shape} vs {yp.shape}")
    d = yt - yp
    d2 = d if d.ndim == 2 else d[:, None]
    lq = np.column_stack([np.quantile(d2, p, axis=0) for p in (0.1, 0.5, 0.9)])
    return ErrorMetrics(mb=float(d.mean()), mae=float(np.abs(d).mean()), level_quantiles=lq)


# ---------------------------------------------------------------------------
# Delimited-text report serialization (plot-ready).
# ---------------------------------------------------------------------------

def write_projection_report(path, report: ProjectionReport) -> None:
    lines = ["statistic,iteration,s_real,s_synth"]
    for name in PROJECTION_STATISTICS:
        s_real, s_synth = report.stats[name]
        for it in range(report.iterations):
            lines.append(f"{name},{it},{s_real[it]!r},{s_synth[it]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_depth_report(path, curves, ranking: DepthRanking) -> None:
    """Per level: envelope of the central group around the median curve."""
    a = _matrix(curves)
    central = a[ranking.groups["central"]]
    median_curve = a[ranking.median_index]
    lines = ["level,q_low,q_mid,q_high"]
    for lev in range(a.shape[1]):
        lines.append(
            f"{lev},{central[:, lev].min()!r},{median_curve[lev]!r},{central[:, lev].max()!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_level_quantiles(path, metrics: ErrorMetrics) -> None:
    lines = ["level,q_low,q_mid,q_high"]
    for lev, row in enumerate(metrics.level_quantiles):
        lines.append(f"{lev},{row[0]!r},{row[1]!r},{row[2]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

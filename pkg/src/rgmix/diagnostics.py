"""Post-processing of chain traces: predictive fit scores, density grids,
posterior component counts, co-clustering summaries, autocorrelation, and
the repulsion shrinkage factor on the tail of the posterior K."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .datasets import Dataset
from .distributions import mvn_diag_logpdf_many
from .errors import DimensionError, SupportError
from .sampler import Trace


@dataclass
class DensityGrid:
    """Tensor-product evaluation grid with one density value per node."""

    axes: list[np.ndarray]
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if self.values.shape != shape:
            raise DimensionError(f"values shape {self.values.shape} != grid {shape}")

    def riemann_sum(self) -> float:
        steps = [float(np.mean(np.diff(a))) for a in self.axes]
        return float(np.sum(self.values) * np.prod(steps))

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


@dataclass
class CoClusterSummary:
    """Posterior co-clustering probabilities and, when ground truth is
    known, the normalized Frobenius misclassification error."""

    h_matrix: np.ndarray
    s_matrix: np.ndarray | None = None
    misclassification: float | None = None


def _sweep_log_mixture(trace: Trace, t: int, points: np.ndarray, n: int, beta: float) -> np.ndarray:
    """Log density of sweep t's mixture at the given points, using the
    collapsed weights (|c|+beta)/(n+K beta), beta/(n+K beta)."""
    k = trace.ks[t]
    ell = trace.ells[t]
    denom = n + k * beta
    logw = np.concatenate(
        [
            np.log((np.asarray(trace.sizes[t], dtype=float) + beta) / denom),
            np.full(k - ell, math.log(beta / denom)),
        ]
    )
    comp = mvn_diag_logpdf_many(points, trace.centers[t], trace.covs[t])
    return logsumexp(comp + logw[None, :], axis=1)


def log_cpo(trace: Trace, data: Dataset, beta: float = 1.0) -> float:
    """Sum over observations of the log of the across-sweep mean predictive
    density.  Uses predictive values recorded in the trace when present;
    otherwise recomputes them from the stored states."""
    if len(trace) == 0:
        raise SupportError("empty trace")
    rows = []
    for t in range(len(trace)):
        lp = trace.log_pred[t]
        if lp is None:
            lp = _sweep_log_mixture(trace, t, data.obs, data.n, beta)
        rows.append(lp)
    mat = np.vstack(rows)  # (sweeps, n)
    per_obs = logsumexp(mat, axis=0) - math.log(mat.shape[0])
    if np.any(np.isneginf(per_obs)):
        warnings.warn("some observation had zero predictive density in every sweep")
        return -math.inf
    return float(np.sum(per_obs))


def predictive_density_grid(trace: Trace, axes, data_n: int | None = None, beta: float = 1.0) -> DensityGrid:
    """Pointwise posterior-mean mixture density over a tensor grid."""
    if len(trace) == 0:
        raise SupportError("empty trace")
    axes = [np.asarray(a, dtype=float) for a in axes]
    p = trace.centers[0].shape[1]
    if len(axes) != p:
        raise DimensionError(f"grid has {len(axes)} axes but the trace is {p}-dimensional")
    n = data_n if data_n is not None else len(trace.assignments[0])
    grid = DensityGrid(axes=axes, values=np.zeros(tuple(len(a) for a in axes)))
    points = grid.points()
    acc = np.zeros(points.shape[0])
    for t in range(len(trace)):
        acc += np.exp(_sweep_log_mixture(trace, t, points, n, beta))
    grid.values = (acc / len(trace)).reshape(grid.values.shape)
    return grid


def posterior_k_distribution(trace: Trace) -> dict[int, float]:
    """Relative frequency of each component count over retained sweeps."""
    if len(trace) == 0:
        raise SupportError("empty trace")
    ks, counts = np.unique(np.asarray(trace.ks), return_counts=True)
    return {int(k): float(c) / len(trace) for k, c in zip(ks, counts)}


def coclustering(trace: Trace, true_labels=None) -> CoClusterSummary:
    """Across-sweep co-assignment frequencies; with labels, also the
    ground-truth indicator matrix and ||H - S||_F / n^2."""
    if len(trace) == 0:
        raise SupportError("empty trace")
    n = len(trace.assignments[0])
    h = np.zeros((n, n))
    for z in trace.assignments:
        onehot = np.equal(z[:, None], np.arange(z.max() + 1)[None, :]).astype(float)
        h += onehot @ onehot.T
    h /= len(trace)
    np.fill_diagonal(h, 1.0)
    s = None
    mis = None
    if true_labels is not None:
        lab = np.asarray(true_labels)
        if lab.shape != (n,):
            raise DimensionError("labels must have one entry per observation")
        s = (lab[:, None] == lab[None, :]).astype(float)
        mis = float(np.linalg.norm(h - s, ord="fro") / n**2)
    return CoClusterSummary(h_matrix=h, s_matrix=s, misclassification=mis)


def shrinkage_constant(
    r: int,
    g0: float,
    n: int,
    n_tail: int,
    tau: float,
    p: int,
    e0_quad: float,
    delta_tau: float,
) -> float:
    """Tail-shrinkage factor of the posterior component count.

    With A = sqrt(2 p tau^2 + (2 n / N) tau^4 * E0[m' S0^-2 m]) and the
    tail point N = n_tail, the factor is
    (1 + g0^{3/2} delta)^{2/3} * A / (g0 + A) for the min-pairwise form
    (r = 1) and (1 + sqrt(g0) delta) * A / (g0 + A) for the product form
    (r = 2).  It equals 1 at g0 = 0 and decays once g0 dominates A.
    """
    if r not in (1, 2):
        raise SupportError(f"r must be 1 or 2, got {r}")
    if n_tail < 3:
        raise SupportError(f"the tail bound needs N >= 3, got {n_tail}")
    if g0 < 0.0:
        raise SupportError("g0 must be non-negative")
    a = math.sqrt(2.0 * p * tau**2 + (2.0 * n / n_tail) * tau**4 * e0_quad)
    if r == 1:
        return (1.0 + g0**1.5 * delta_tau) ** (2.0 / 3.0) * a / (g0 + a)
    return (1.0 + math.sqrt(g0) * delta_tau) * a / (g0 + a)


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (biased normalization).

    A constant series has no scale; it yields [1, 0, ..., 0] with a
    warning."""
    x = np.asarray(series, dtype=float).ravel()
    if x.shape[0] <= max_lag:
        raise SupportError(f"series of length {x.shape[0]} cannot support lag {max_lag}")
    centered = x - x.mean()
    denom = float(np.dot(centered, centered))
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom == 0.0:
        warnings.warn("constant series: autocorrelation undefined beyond lag 0")
        return out
    for lag in range(1, max_lag + 1):
        out[lag] = float(np.dot(centered[:-lag], centered[lag:])) / denom
    return out


def write_grid_csv(grid: DensityGrid, path: str) -> None:
    points = grid.points()
    with open(path, "w") as fh:
        fh.write(",".join(f"x{j + 1}" for j in range(points.shape[1])) + ",density\n")
        for row, val in zip(points, grid.values.ravel()):
            fh.write(",".join(f"{v:.10g}" for v in row) + f",{val:.10g}\n")


def write_k_histogram_csv(freqs: dict[int, float], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("k,probability\n")
        for k in sorted(freqs):
            fh.write(f"{k},{freqs[k]:.10g}\n")


def write_acf_csv(acf: np.ndarray, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("lag,acf\n")
        for lag, val in enumerate(acf):
            fh.write(f"{lag},{val:.10g}\n")


def write_cocluster_csv(summary: CoClusterSummary, path: str) -> None:
    np.savetxt(path, summary.h_matrix, fmt="%.6g", delimiter=",")

"""Synthetic data generators for the benchmark scenarios, the eruption
pairing transform, and CSV dataset I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .errors import DataFormatError, SupportError

TRIMODAL_2D = "trimodal"
EMG_2D = "emg"
TEN_D_3COMP = "tend10"
THIRTEEN_2D = "thirteen"

SCENARIOS = (TRIMODAL_2D, EMG_2D, TEN_D_3COMP, THIRTEEN_2D)


@dataclass
class Dataset:
    """Observation matrix with optional ground-truth component labels."""

    obs: np.ndarray
    true_labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.obs = np.atleast_2d(np.asarray(self.obs, dtype=float))
        if self.obs.ndim != 2 or self.obs.shape[0] < 1:
            raise SupportError("observations must form a non-empty (n, p) matrix")
        if not np.all(np.isfinite(self.obs)):
            raise SupportError("observations must be finite")
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels, dtype=int)
            if self.true_labels.shape != (self.obs.shape[0],):
                raise SupportError("labels must have one entry per observation")

    @property
    def n(self) -> int:
        return self.obs.shape[0]

    @property
    def p(self) -> int:
        return self.obs.shape[1]


def _trimodal_params():
    weights = np.array([0.4, 0.3, 0.3])
    means = np.array([[0.0, 0.0], [-6.0, -6.0], [6.0, 6.0]])
    covs = np.array([[2.0, 1.0], [3.0, 3.0], [2.0, 2.0]])
    return weights, means, covs


def _tend10_params():
    weights = np.array([0.4, 0.3, 0.3])
    means = np.zeros((3, 10))
    means[1] = -6.0
    means[2] = 6.0
    covs = np.ones((3, 10))
    covs[0] = [5.5729, 5.0110, 3.6832, 8.1931, 5.7717, 3.0267, 3.5011, 7.8291, 4.2233, 4.3885]
    covs[1] = 3.0
    covs[2] = 2.0
    return weights, means, covs


def _thirteen_params():
    # Twelve unit-variance components on a symmetric grid around a broad
    # central component; weights 1/24 each and 12/24 for the center.
    ring = np.array(
        [
            [6.0, 6.0], [6.0, 12.0], [12.0, 6.0],
            [-6.0, 6.0], [-6.0, 12.0], [-12.0, 6.0],
            [6.0, -6.0], [6.0, -12.0], [12.0, -6.0],
            [-6.0, -6.0], [-6.0, -12.0], [-12.0, -6.0],
        ]
    )
    weights = np.full(13, 1.0 / 24.0)
    weights[12] = 12.0 / 24.0
    means = np.vstack([ring, [0.0, 0.0]])
    covs = np.ones((13, 2))
    covs[12] = 30.0
    return weights, means, covs


def scenario_mixture(scenario: str):
    """(weights, means, eigenvalues) of a finite-mixture scenario."""
    if scenario == TRIMODAL_2D:
        return _trimodal_params()
    if scenario == TEN_D_3COMP:
        return _tend10_params()
    if scenario == THIRTEEN_2D:
        return _thirteen_params()
    raise SupportError(f"scenario {scenario!r} is not a finite mixture")


def scenario_density(scenario: str, points: np.ndarray) -> np.ndarray:
    """True data-generating density at the given (m, p) points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if scenario == EMG_2D:
        out = np.ones(points.shape[0])
        for j in range(points.shape[1]):
            out *= emg_marginal_density(points[:, j], -4.0)
        return out
    weights, means, covs = scenario_mixture(scenario)
    out = np.zeros(points.shape[0])
    for w, mu, lam in zip(weights, means, covs):
        resid = points - mu
        quad = np.sum(resid * resid / lam, axis=1)
        norm = np.prod(2.0 * math.pi * lam) ** -0.5
        out += w * norm * np.exp(-0.5 * quad)
    return out


def generate_synthetic(scenario: str, n: int, seed) -> Dataset:
    """Draw n i.i.d. observations from a named scenario.

    Finite-mixture scenarios carry true component labels; the smoothed
    exponential scenario ("emg") has a continuous mixing law and none.
    """
    if n < 1:
        raise SupportError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if scenario == EMG_2D:
        z = rng.normal(-4.0, 1.0, size=(n, 2))
        e = rng.exponential(1.0, size=(n, 2))
        return Dataset(obs=z + e, true_labels=None, name=scenario)
    if scenario not in SCENARIOS:
        raise SupportError(f"unknown scenario {scenario!r}; valid: {', '.join(SCENARIOS)}")
    weights, means, covs = scenario_mixture(scenario)
    labels = rng.choice(len(weights), size=n, p=weights)
    noise = rng.standard_normal((n, means.shape[1]))
    obs = means[labels] + noise * np.sqrt(covs[labels])
    return Dataset(obs=obs, true_labels=labels, name=scenario)


def emg_marginal_density(y, mu0: float):
    """Density of z + e with z ~ N(mu0, 1) and e ~ Exponential(1).

    Evaluated in the overflow-safe scaled-erfc form
    0.5 * erfcx((1 - u) / sqrt(2)) * exp(-u^2 / 2) with u = y - mu0, which
    equals 0.5 * exp(mu0 - y + 1/2) * erfc((mu0 + 1 - y) / sqrt(2)).
    """
    u = np.asarray(y, dtype=float) - mu0
    t = (1.0 - u) / math.sqrt(2.0)
    # deep right tail: erfc(t) saturates at 2 and the erfcx form overflows
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.where(
            t < -6.0,
            np.exp(0.5 - u),
            0.5 * erfcx(t) * np.exp(-0.5 * u * u),
        )
    return float(out) if out.ndim == 0 else out


def pair_consecutive(series) -> Dataset:
    """Bivariate rows (x_i, x_{i+1}) from a univariate series of length n,
    giving n - 1 observations."""
    arr = np.asarray(series, dtype=float).ravel()
    if arr.shape[0] < 2:
        raise SupportError(f"need at least 2 values to pair, got {arr.shape[0]}")
    return Dataset(obs=np.column_stack([arr[:-1], arr[1:]]), name="paired")


def write_dataset(ds: Dataset, path: str) -> None:
    """CSV with header x1..xp (plus `label` when labels are present)."""
    cols = [f"x{j + 1}" for j in range(ds.p)]
    if ds.true_labels is not None:
        cols.append("label")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(ds.n):
            row = [f"{v:.17g}" for v in ds.obs[i]]
            if ds.true_labels is not None:
                row.append(str(int(ds.true_labels[i])))
            fh.write(",".join(row) + "\n")


def load_dataset(path: str, name: str | None = None) -> Dataset:
    """Read a CSV with an optional single header row; a `label` column,
    when present in the header, becomes the ground-truth labels."""
    rows: list[list[str]] = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = None
    first = [tok.strip() for tok in lines[0].split(",")]
    if any(not _is_number(tok) for tok in first):
        header = first
        lines = lines[1:]
    label_col = None
    if header is not None and "label" in header:
        label_col = header.index("label")
    width = None
    obs_rows, labels = [], []
    for offset, line in enumerate(lines):
        line_no = offset + (2 if header is not None else 1)
        if not line.strip():
            continue
        toks = [tok.strip() for tok in line.split(",")]
        if width is None:
            width = len(toks)
            if header is not None and len(header) != width:
                raise DataFormatError("row width differs from header", line=line_no)
        elif len(toks) != width:
            raise DataFormatError(
                f"expected {width} columns, found {len(toks)}", line=line_no
            )
        try:
            vals = [float(tok) for tok in toks]
        except ValueError:
            raise DataFormatError(f"non-numeric value in {toks}", line=line_no) from None
        if label_col is not None:
            labels.append(int(vals.pop(label_col)))
        obs_rows.append(vals)
    if not obs_rows:
        raise DataFormatError(f"{path}: no observation rows")
    return Dataset(
        obs=np.asarray(obs_rows),
        true_labels=np.asarray(labels) if label_col is not None else None,
        name=name or path,
    )


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False

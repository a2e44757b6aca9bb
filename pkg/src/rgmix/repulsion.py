"""Repulsive prior over component centers: the distance attenuation g,
the two joint repulsion forms, Monte Carlo estimation of the prior
normalizers Z_K, accept-reject sampling of center configurations, and the
joint prior log density of a full parameter configuration."""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import trunc_inv_gamma_logpdf
from .errors import DimensionError, RejectionCapError, SupportError

MIN_PAIRWISE = "min_pairwise"
PRODUCT_POWER = "product_power"

_FORMS = (MIN_PAIRWISE, PRODUCT_POWER)


@dataclass(frozen=True)
class RepulsionSpec:
    """Repulsion hyperparameters.

    form: "min_pairwise" takes the minimum of g over center pairs;
    "product_power" takes the product of g over pairs raised to 1/K.
    g0 >= 0 is the attenuation scale of g(x) = x / (g0 + x); g0 = 0
    recovers the independent prior (repulsion only excludes exact ties).
    tau > 0 is the prior standard deviation of each center coordinate.
    """

    form: str = MIN_PAIRWISE
    g0: float = 10.0
    tau: float = 10.0

    def __post_init__(self):
        if self.form not in _FORMS:
            raise SupportError(f"unknown repulsion form {self.form!r}; use one of {_FORMS}")
        if self.g0 < 0.0:
            raise SupportError(f"g0 must be non-negative, got {self.g0}")
        if self.tau <= 0.0:
            raise SupportError(f"tau must be positive, got {self.tau}")

    @property
    def independent(self) -> bool:
        return self.g0 == 0.0


def g_repulse(x, g0: float):
    """Distance attenuation g(x) = x / (g0 + x) on x >= 0, valued in [0, 1].

    Conventions at the boundary: g(0) = 0 for every g0 (coincident centers
    carry zero prior density), and g(x) = 1 for x > 0 when g0 = 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise SupportError("distances must be non-negative")
    if g0 < 0.0:
        raise SupportError(f"g0 must be non-negative, got {g0}")
    with np.errstate(invalid="ignore"):
        out = np.where(x > 0.0, x / (g0 + x), 0.0)
    return float(out) if out.ndim == 0 else out


def _pairwise_log_g(centers: np.ndarray, g0: float) -> np.ndarray:
    """log g over all K(K-1)/2 pairwise distances of stacked configurations.

    centers has shape (m, K, p); returns (m, K*(K-1)//2). Entries are -inf
    where a pair coincides.
    """
    m, k, _ = centers.shape
    cols = []
    for a in range(k - 1):
        diff = centers[:, a + 1 :, :] - centers[:, a : a + 1, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        cols.append(d)
    d = np.concatenate(cols, axis=1) if cols else np.empty((m, 0))
    with np.errstate(divide="ignore"):
        if g0 == 0.0:
            return np.where(d > 0.0, 0.0, -np.inf)
        return np.where(d > 0.0, np.log(d) - np.log(g0 + d), -np.inf)


def log_repulse_h(centers, spec: RepulsionSpec) -> float:
    """log h_K of a single configuration; -inf when two centers coincide."""
    arr = np.asarray(centers, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"centers must be a (K, p) array, got shape {arr.shape}")
    k = arr.shape[0]
    if k <= 1:
        return 0.0
    log_g = _pairwise_log_g(arr[None, :, :], spec.g0)[0]
    if spec.form == MIN_PAIRWISE:
        return float(np.min(log_g))
    return float(np.sum(log_g) / k)


def repulse_h(centers, spec: RepulsionSpec) -> float:
    """Repulsion factor h_K(centers) in [0, 1]; 1 for a single center."""
    return float(np.exp(log_repulse_h(centers, spec)))


def _log_h_many(centers: np.ndarray, spec: RepulsionSpec) -> np.ndarray:
    """log h_K for stacked configurations of shape (m, K, p)."""
    k = centers.shape[1]
    if k <= 1:
        return np.zeros(centers.shape[0])
    log_g = _pairwise_log_g(centers, spec.g0)
    if spec.form == MIN_PAIRWISE:
        return np.min(log_g, axis=1)
    return np.sum(log_g, axis=1) / k


@dataclass(frozen=True)
class ZkEstimate:
    """Monte Carlo estimate of log Z_K with its standard error.

    log_g_sq_mean carries the matching estimate of E[(log g(|mu1 - mu2|))^2]
    so the linear-in-K bound constant c1 = sqrt(E[(log g)^2] / 2) can be
    formed from the same run.
    """

    k: int
    log_zk: float
    std_err: float
    n_mc: int
    log_g_sq_mean: float = 0.0

    @property
    def c1(self) -> float:
        return math.sqrt(0.5 * self.log_g_sq_mean)


def estimate_log_zk(k: int, spec: RepulsionSpec, p: int, n_mc: int, rng) -> ZkEstimate:
    """Plain Monte Carlo estimate of log Z_K = log E[h_K] under K iid
    N(0, tau^2 I_p) centers, with a delta-method standard error.

    Exact shortcuts: K = 1 gives log Z_1 = 0; g0 = 0 gives log Z_K = 0 for
    any K since h is a.s. 1 under a continuous center prior.
    """
    if k < 1:
        raise SupportError(f"K must be >= 1, got {k}")
    if k == 1 or spec.independent:
        return ZkEstimate(k=k, log_zk=0.0, std_err=0.0, n_mc=n_mc)
    if n_mc < 10**3:
        raise SupportError(f"n_mc must be at least 1000, got {n_mc}")

    chunk = max(1, int(4_000_000 / (k * p)))
    log_h_sum = -np.inf  # running logsumexp of log h
    log_h2_sum = -np.inf  # running logsumexp of 2 log h
    log_g_sq_total = 0.0
    n_pairs_total = 0
    done = 0
    while done < n_mc:
        m = min(chunk, n_mc - done)
        draws = rng.standard_normal((m, k, p)) * spec.tau
        log_g = _pairwise_log_g(draws, spec.g0)
        if spec.form == MIN_PAIRWISE:
            log_h = np.min(log_g, axis=1)
        else:
            log_h = np.sum(log_g, axis=1) / k
        log_h_sum = np.logaddexp(log_h_sum, logsumexp(log_h))
        log_h2_sum = np.logaddexp(log_h2_sum, logsumexp(2.0 * log_h))
        log_g_sq_total += float(np.sum(log_g * log_g))
        n_pairs_total += log_g.size
        done += m

    if not np.isfinite(log_h_sum):
        raise SupportError("all Monte Carlo h samples were zero")
    log_mean = float(log_h_sum - math.log(n_mc))
    log_mean_sq = float(log_h2_sum - math.log(n_mc))
    # var(h) = E[h^2] - E[h]^2; SE(log mean) = sd(h) / (mean * sqrt(n))
    var_h = math.exp(log_mean_sq) - math.exp(2.0 * log_mean)
    var_h = max(var_h, 0.0)
    std_err = math.sqrt(var_h / n_mc) / math.exp(log_mean)
    return ZkEstimate(
        k=k,
        log_zk=min(log_mean, 0.0),
        std_err=std_err,
        n_mc=n_mc,
        log_g_sq_mean=log_g_sq_total / max(n_pairs_total, 1),
    )


def build_log_zk_table(k_max: int, spec: RepulsionSpec, p: int, n_mc: int, rng) -> list[ZkEstimate]:
    """Z_K estimates for K = 1..k_max (index 0 holds K = 1)."""
    return [estimate_log_zk(k, spec, p, n_mc, rng) for k in range(1, k_max + 1)]


def sample_centers_rejection(
    k_total: int,
    fixed: dict[int, np.ndarray],
    proposal_means: dict[int, np.ndarray],
    proposal_covs: dict[int, np.ndarray],
    spec: RepulsionSpec,
    max_attempts: int,
    rng,
) -> np.ndarray:
    """Draw a K-center configuration by thinning independent proposals.

    Entries of ``fixed`` (index -> center) are held; every other index in
    0..K-1 must appear in ``proposal_means``/``proposal_covs`` (diagonal
    Gaussian proposals).  Free centers are redrawn together with a fresh
    uniform until U < h_K(all K centers).  With g0 = 0 the first proposal
    is returned outright since h is a.s. 1.
    """
    free = [i for i in range(k_total) if i not in fixed]
    missing = [i for i in free if i not in proposal_means or i not in proposal_covs]
    if missing:
        raise DimensionError(f"no proposal supplied for free indices {missing}")

    if free:
        p = np.asarray(proposal_means[free[0]], dtype=float).shape[0]
    else:
        p = np.asarray(next(iter(fixed.values())), dtype=float).shape[0]
    centers = np.empty((k_total, p))
    for i, c in fixed.items():
        centers[i] = np.asarray(c, dtype=float)
    if not free:
        return centers

    means = np.stack([np.asarray(proposal_means[i], dtype=float) for i in free])
    sds = np.sqrt(np.stack([np.asarray(proposal_covs[i], dtype=float) for i in free]))

    for attempt in range(1, max_attempts + 1):
        centers[free] = means + sds * rng.standard_normal(means.shape)
        if k_total == 1 or spec.independent:
            return centers
        log_h = log_repulse_h(centers, spec)
        if log_h == 0.0 or math.log(rng.random()) < log_h:
            return centers
    raise RejectionCapError(max_attempts)


def joint_prior_logdensity(
    centers,
    covs,
    spec: RepulsionSpec,
    log_zk: float,
    cov_prior: tuple[float, float, float, float] | None,
) -> float:
    """Log of the joint prior density of all K component parameters:
    -log Z_K + sum of center log densities under N(0, tau^2 I) + sum of
    eigenvalue log densities under the truncated inverse-gamma + log h_K.

    cov_prior is (a0, b0, lo, hi); pass None when covariances are fixed
    (point-mass prior contributes nothing).  Coincident centers give -inf.
    """
    centers = np.asarray(centers, dtype=float)
    covs = np.asarray(covs, dtype=float)
    if centers.ndim != 2:
        raise DimensionError("centers must be a (K, p) array")
    if cov_prior is not None and covs.shape != centers.shape:
        raise DimensionError(
            f"centers {centers.shape} and covs {covs.shape} must share shape"
        )
    k, p = centers.shape
    out = -log_zk + log_repulse_h(centers, spec)
    out += float(
        -0.5 * np.sum(centers * centers) / spec.tau**2
        - k * p * 0.5 * math.log(2.0 * math.pi * spec.tau**2)
    )
    if cov_prior is not None:
        a0, b0, lo, hi = cov_prior
        out += float(np.sum(trunc_inv_gamma_logpdf(covs, a0, b0, lo, hi)))
    return out


def zk_table_key(spec: RepulsionSpec, p: int, k_max: int, n_mc: int) -> str:
    """Content hash identifying a Z_K table's generating settings."""
    blob = f"{spec.form}|{spec.g0:.17g}|{spec.tau:.17g}|{p}|{k_max}|{n_mc}"
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_zk_table(path: str, table: list[ZkEstimate]) -> None:
    """Write a (K, log_zk) two-column ASCII file at full double precision."""
    with open(path, "w") as fh:
        for est in table:
            fh.write(f"{est.k} {est.log_zk:.17g}\n")


def load_zk_table(path: str) -> list[float]:
    """Read log Z_K values written by :func:`save_zk_table` (index 0 ~ K=1)."""
    values: list[float] = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if len(parts) != 2:
                raise SupportError(f"{path}:{line_no}: expected two columns")
            k, log_zk = int(parts[0]), float(parts[1])
            if k != len(values) + 1:
                raise SupportError(f"{path}:{line_no}: rows must list K = 1.. in order")
            values.append(log_zk)
    if not values:
        raise SupportError(f"{path}: empty Z_K table")
    return values


def cached_log_zk_table(
    cache_dir: str | None,
    spec: RepulsionSpec,
    p: int,
    k_max: int,
    n_mc: int,
    rng,
) -> list[float]:
    """Return log Z_K for K = 1..k_max, reusing an on-disk table when a
    cache directory is given and a matching file exists."""
    if cache_dir:
        path = os.path.join(cache_dir, f"zk_{zk_table_key(spec, p, k_max, n_mc)}.txt")
        if os.path.exists(path):
            values = load_zk_table(path)
            if len(values) >= k_max:
                return values[:k_max]
        table = build_log_zk_table(k_max, spec, p, n_mc, rng)
        os.makedirs(cache_dir, exist_ok=True)
        save_zk_table(path, table)
        return [est.log_zk for est in table]
    return [est.log_zk for est in build_log_zk_table(k_max, spec, p, n_mc, rng)]

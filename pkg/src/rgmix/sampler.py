"""Blocked-collapsed Gibbs sampler for the repulsive mixture model.

A sweep reseats every observation through the auxiliary-variable urn move,
resamples the number of components K over a small window around the
occupied count, redraws cluster covariances from their truncated
conjugate posteriors, and block-resamples all centers (occupied from
conjugate posteriors, unoccupied from the prior) thinned by the repulsion
factor."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .datasets import Dataset
from .distributions import KPrior, mvn_diag_logpdf_many, sample_truncated_inv_gamma
from .errors import ChainError, RejectionCapError, SupportError
from .partition import Partition, VnTable, compute_vn_table, k_window_weights
from .repulsion import (
    RepulsionSpec,
    _log_h_many,
    cached_log_zk_table,
    joint_prior_logdensity,
    log_repulse_h,
)


@dataclass(frozen=True)
class ModelConfig:
    """Model hyperparameters and sampler controls.

    beta is the symmetric Dirichlet concentration of the mixing weights
    (kept in (0, 1]).  a0/b0 and the eigenvalue bounds parameterize the
    truncated inverse-gamma prior on covariance eigenvalues; setting
    ``fixed_cov`` freezes every eigenvalue at that value instead
    (location-mixture mode).  m is the half-width of the K resampling
    window; k_max bounds the precomputed Z_K table; zk_mc and ztilde_mc
    size the two Monte Carlo integrations.
    """

    beta: float = 1.0
    spec: RepulsionSpec = RepulsionSpec()
    a0: float = 2.0
    b0: float = 2.0
    sigma_lo_sq: float = 0.01
    sigma_hi_sq: float = 100.0
    k_prior: KPrior = KPrior()
    m: int = 2
    k_max: int = 30
    zk_mc: int = 10**6
    ztilde_mc: int = 2000
    k_init: int = 1
    exact_k_weights: bool = True
    max_rejection_attempts: int = 100_000
    fixed_cov: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise SupportError(f"beta must lie in (0, 1], got {self.beta}")
        if self.m < 0:
            raise SupportError(f"m must be >= 0, got {self.m}")
        if not (0.0 < self.sigma_lo_sq <= self.sigma_hi_sq):
            raise SupportError("need 0 < sigma_lo_sq <= sigma_hi_sq")
        if self.a0 <= 0.0 or self.b0 <= 0.0:
            raise SupportError("a0 and b0 must be positive")
        if self.k_max < 1 or self.k_init < 1:
            raise SupportError("k_max and k_init must be >= 1")
        if self.k_init > self.k_max:
            raise SupportError(
                f"k_init={self.k_init} exceeds the component budget k_max={self.k_max}"
            )
        if self.ztilde_mc < 1:
            raise SupportError("ztilde_mc must be >= 1")
        if self.fixed_cov is not None and not np.isscalar(self.fixed_cov):
            object.__setattr__(self, "fixed_cov", tuple(float(v) for v in self.fixed_cov))

    def resolve_fixed_cov(self, p: int) -> np.ndarray | None:
        if self.fixed_cov is None:
            return None
        arr = np.broadcast_to(np.asarray(self.fixed_cov, dtype=float), (p,)).copy()
        if np.any(arr <= 0.0):
            raise SupportError("fixed_cov entries must be positive")
        return arr

    def content_hash(self) -> str:
        blob = "|".join(
            [
                f"{self.beta:.17g}",
                self.spec.form,
                f"{self.spec.g0:.17g}",
                f"{self.spec.tau:.17g}",
                f"{self.a0:.17g}",
                f"{self.b0:.17g}",
                f"{self.sigma_lo_sq:.17g}",
                f"{self.sigma_hi_sq:.17g}",
                f"{self.k_prior.intensity:.17g}",
                self.k_prior.mode,
                repr(self.k_prior.log_zk_table),
                str(self.m),
                str(self.k_max),
                str(self.zk_mc),
                str(self.ztilde_mc),
                str(self.k_init),
                str(self.exact_k_weights),
                str(self.max_rejection_attempts),
                repr(self.fixed_cov),
            ]
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class MixtureState:
    """Partition plus component parameters, occupied clusters first.

    ``centers``/``covs`` hold the ell occupied clusters in canonical label
    order; the k - ell unoccupied components live in the ``empty_*``
    arrays.  Covariance matrices are diagonal and stored as eigenvalue
    rows."""

    part: Partition
    centers: np.ndarray
    covs: np.ndarray
    k: int
    empty_centers: np.ndarray
    empty_covs: np.ndarray

    @property
    def ell(self) -> int:
        return self.part.ell

    def all_centers(self) -> np.ndarray:
        return np.vstack([self.centers, self.empty_centers])

    def all_covs(self) -> np.ndarray:
        return np.vstack([self.covs, self.empty_covs])

    def validate(self, config: ModelConfig | None = None) -> None:
        ell = self.part.ell
        if self.centers.shape[0] != ell or self.covs.shape[0] != ell:
            raise SupportError("occupied parameter rows must match cluster count")
        if self.k < ell:
            raise SupportError(f"k={self.k} below cluster count {ell}")
        if self.empty_centers.shape[0] != self.k - ell:
            raise SupportError("empty component rows must match k - ell")
        allc = self.all_centers()
        if len(np.unique(allc, axis=0)) != len(allc):
            raise SupportError("component centers must be pairwise distinct")
        if config is not None:
            lam = self.all_covs()
            lo, hi = _cov_bounds(config)
            if np.any(lam < lo - 1e-12) or np.any(lam > hi + 1e-12):
                raise SupportError("covariance eigenvalues left their bounds")


def _cov_bounds(config: ModelConfig) -> tuple[float, float]:
    if config.fixed_cov is not None:
        vals = np.atleast_1d(np.asarray(config.fixed_cov, dtype=float))
        return float(vals.min()), float(vals.max())
    return config.sigma_lo_sq, config.sigma_hi_sq


@dataclass
class TraceMeta:
    seed: int | None = None
    config_hash: str = ""
    n: int = 0
    p: int = 0
    n_sweeps: int = 0
    burn_in: int = 0
    thin: int = 1
    elapsed_s: float = 0.0


class Trace:
    """Columnar record of retained sweeps."""

    def __init__(self, meta: TraceMeta | None = None):
        self.meta = meta or TraceMeta()
        self.iterations: list[int] = []
        self.ks: list[int] = []
        self.ells: list[int] = []
        self.sizes: list[tuple[int, ...]] = []
        self.centers: list[np.ndarray] = []
        self.covs: list[np.ndarray] = []
        self.assignments: list[np.ndarray] = []
        self.log_pred: list[np.ndarray | None] = []

    def __len__(self) -> int:
        return len(self.iterations)

    def append(self, iteration: int, state: MixtureState, log_pred: np.ndarray | None):
        self.iterations.append(iteration)
        self.ks.append(state.k)
        self.ells.append(state.ell)
        self.sizes.append(tuple(state.part.sizes))
        self.centers.append(state.all_centers().copy())
        self.covs.append(state.all_covs().copy())
        self.assignments.append(np.asarray(state.part.assignments, dtype=np.int64))
        self.log_pred.append(None if log_pred is None else np.asarray(log_pred))

    def write_jsonl(self, path: str) -> None:
        """One JSON record per retained sweep with a stable key order:
        iteration, k, ell, sizes, centers, lambdas, assignments.  Center
        and eigenvalue blocks are flattened row-major over all k
        components, occupied clusters first."""
        with open(path, "w") as fh:
            for t in range(len(self)):
                rec = {
                    "iteration": self.iterations[t],
                    "k": self.ks[t],
                    "ell": self.ells[t],
                    "sizes": list(self.sizes[t]),
                    "centers": [float(v) for v in self.centers[t].ravel()],
                    "lambdas": [float(v) for v in self.covs[t].ravel()],
                    "assignments": [int(v) for v in self.assignments[t]],
                }
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def read_jsonl(cls, path: str) -> "Trace":
        trace = cls()
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SupportError(f"{path}:{line_no}: bad trace record: {exc}") from None
                k = int(rec["k"])
                centers = np.asarray(rec["centers"], dtype=float).reshape(k, -1)
                covs = np.asarray(rec["lambdas"], dtype=float).reshape(k, -1)
                trace.iterations.append(int(rec["iteration"]))
                trace.ks.append(k)
                trace.ells.append(int(rec["ell"]))
                trace.sizes.append(tuple(int(v) for v in rec["sizes"]))
                trace.centers.append(centers)
                trace.covs.append(covs)
                trace.assignments.append(np.asarray(rec["assignments"], dtype=np.int64))
                trace.log_pred.append(None)
        if len(trace) == 0:
            raise SupportError(f"{path}: empty trace")
        return trace


@dataclass
class ChainTables:
    """Shared read-only inputs of one chain: the V_n table and log Z_K."""

    vn: VnTable
    log_zk: np.ndarray
    _window_cache: dict = field(default_factory=dict, repr=False)

    def window(self, ell: int, n: int, m: int, config: ModelConfig, k_cap: int | None = None):
        """Cached window weights of K on {ell..ell+m}; with k_cap (the Z_K
        table extent, the guessed upper bound on K) candidates beyond the
        cap are dropped and the window renormalized."""
        key = (ell, m, k_cap)
        hit = self._window_cache.get(key)
        if hit is None:
            if k_cap is not None and ell > k_cap:
                raise SupportError(
                    f"partition has {ell} clusters but the Z_K table only covers "
                    f"K <= {k_cap}; raise k_max"
                )
            eff_m = m if k_cap is None else min(m, k_cap - ell)
            ks, probs = k_window_weights(
                ell,
                n,
                eff_m,
                beta=config.beta,
                prior=config.k_prior,
                exact=config.exact_k_weights,
            )
            hit = (ks, np.cumsum(probs))
            self._window_cache[key] = hit
        return hit


def build_chain_tables(
    n: int,
    p: int,
    config: ModelConfig,
    rng=None,
    zk_cache_dir: str | None = None,
) -> ChainTables:
    """V_n table over all reachable cluster counts plus the Z_K table.

    The Z_K Monte Carlo uses its own generator so that cache hits and
    misses leave the chain's stream untouched."""
    vn = compute_vn_table(n, config.beta, config.k_prior, ell_max=n)
    if config.spec.independent:
        log_zk = np.zeros(config.k_max)
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        log_zk = np.asarray(
            cached_log_zk_table(
                zk_cache_dir, config.spec, p, config.k_max, config.zk_mc, rng
            )
        )
    return ChainTables(vn=vn, log_zk=log_zk)


# ---------------------------------------------------------------------------
# The sweep engine: a mutable working copy of the state with O(1) cluster
# bookkeeping.  Public step functions wrap it; run_chain drives it directly.
# ---------------------------------------------------------------------------


class _Engine:
    def __init__(self, data: Dataset, config: ModelConfig, tables: ChainTables, rng):
        self.y = data.obs
        self.n, self.p = self.y.shape
        self.config = config
        self.tables = tables
        self.rng = rng
        self.fixed_cov = config.resolve_fixed_cov(self.p)
        self.log_beta = math.log(config.beta)
        if self.fixed_cov is None:
            # inverse-CDF constants of the prior eigenvalue law (1/lambda is
            # gamma(a0) with rate b0, windowed to the truncation interval)
            from scipy.special import gammainc

            self._prior_cov_window = (
                float(gammainc(config.a0, config.b0 / config.sigma_hi_sq)),
                float(gammainc(config.a0, config.b0 / config.sigma_lo_sq)),
            )
        self.z = np.zeros(self.n, dtype=np.int64)
        self.sizes = np.zeros(0, dtype=np.int64)
        self.centers = np.zeros((0, self.p))
        self.covs = np.zeros((0, self.p))
        self.k = 0
        self.empty_centers = np.zeros((0, self.p))
        self.empty_covs = np.zeros((0, self.p))
        # min/sum of log g over occupied-center pairs; centers only move in
        # Step 4, so Step 1 can reuse it across observations
        self._occ_stat: float | None = None

    def _occupied_pair_stat(self) -> float:
        if self._occ_stat is None:
            self._occ_stat = _pair_stat(self.centers, self.centers, self.config.spec, within=True)
        return self._occ_stat

    # -- state conversion ---------------------------------------------------

    def load_state(self, state: MixtureState) -> None:
        self._occ_stat = None
        self.z = np.asarray(state.part.assignments, dtype=np.int64).copy()
        self.sizes = np.asarray(state.part.sizes, dtype=np.int64).copy()
        self.centers = state.centers.copy()
        self.covs = state.covs.copy()
        self.k = state.k
        self.empty_centers = state.empty_centers.copy()
        self.empty_covs = state.empty_covs.copy()

    def to_state(self) -> MixtureState:
        self.canonicalize()
        return MixtureState(
            part=Partition(tuple(int(v) for v in self.z)),
            centers=self.centers.copy(),
            covs=self.covs.copy(),
            k=self.k,
            empty_centers=self.empty_centers.copy(),
            empty_covs=self.empty_covs.copy(),
        )

    @property
    def ell(self) -> int:
        return len(self.sizes)

    # -- initialization -----------------------------------------------------

    def init(self, k_init: int) -> None:
        if not (1 <= k_init <= self.n):
            raise SupportError(f"k_init must lie in 1..n, got {k_init}")
        cfg = self.config
        centers = cfg.spec.tau * self.rng.standard_normal((k_init, self.p))
        if self.fixed_cov is not None:
            covs = np.tile(self.fixed_cov, (k_init, 1))
        else:
            covs = np.full(
                (k_init, self.p), np.clip(1.0, cfg.sigma_lo_sq, cfg.sigma_hi_sq)
            )
        logp = mvn_diag_logpdf_many(self.y, centers, covs)
        raw = np.argmax(logp, axis=1)
        # keep occupied components only, labeled by first appearance
        order: list[int] = []
        relabel = np.full(k_init, -1, dtype=np.int64)
        for lab in raw:
            if relabel[lab] < 0:
                relabel[lab] = len(order)
                order.append(int(lab))
        self._occ_stat = None
        self.z = relabel[raw]
        self.sizes = np.bincount(self.z, minlength=len(order)).astype(np.int64)
        self.centers = centers[order]
        self.covs = covs[order]
        self.k = len(order)
        self.empty_centers = np.zeros((0, self.p))
        self.empty_covs = np.zeros((0, self.p))

    # -- shared draws ---------------------------------------------------------

    def _draw_prior_cov(self, rows: int) -> np.ndarray:
        if rows == 0:
            return np.zeros((0, self.p))
        if self.fixed_cov is not None:
            return np.tile(self.fixed_cov, (rows, 1))
        cfg = self.config
        p_lo, p_hi = self._prior_cov_window
        if p_hi - p_lo > 1e-12:
            from scipy.special import gammaincinv

            u = p_lo + self.rng.random((rows, self.p)) * (p_hi - p_lo)
            lam = cfg.b0 / gammaincinv(cfg.a0, u)
            return np.clip(lam, cfg.sigma_lo_sq, cfg.sigma_hi_sq)
        return np.asarray(
            sample_truncated_inv_gamma(
                cfg.a0, cfg.b0, cfg.sigma_lo_sq, cfg.sigma_hi_sq, self.rng, size=(rows, self.p)
            )
        )

    def _draw_empties_thinned(self, occupied: np.ndarray, count: int) -> np.ndarray:
        """count prior centers accepted against h_K(occupied + empties).

        Proposals are drawn in small batches so the pairwise work is
        vectorized across attempts."""
        spec = self.config.spec
        tau = spec.tau
        if count == 0:
            return np.zeros((0, self.p))
        if spec.independent:
            return tau * self.rng.standard_normal((count, self.p))

        fixed_stat = self._occupied_pair_stat()
        k_total = occupied.shape[0] + count
        min_form = spec.form == "min_pairwise"

        def attempt_once(cap: int) -> np.ndarray:
            batch = 8
            tried = 0
            while tried < cap:
                empties = tau * self.rng.standard_normal((batch, count, self.p))
                stat = _batched_pair_stat(empties, occupied, spec.g0, min_form, fixed_stat)
                log_h = stat if min_form else stat / k_total
                accept = np.log(self.rng.random(batch)) < log_h
                hits = np.flatnonzero(accept)
                if hits.size:
                    return empties[hits[0]]
                tried += batch
                batch = min(2 * batch, 64)
            raise RejectionCapError(cap)

        return self._with_retry(attempt_once)

    def _with_retry(self, attempt):
        cap = self.config.max_rejection_attempts
        try:
            return attempt(cap)
        except RejectionCapError:
            # one more pass with fresh randomness before giving up
            return attempt(cap)

    # -- Step 1: reseat one observation --------------------------------------

    def reassign(self, i: int) -> None:
        cfg = self.config
        y = self.y[i]
        old = int(self.z[i])
        singleton = self.sizes[old] == 1
        if singleton and self.ell == 1:
            return  # no other cluster exists; i keeps its singleton

        grow_allowed = True
        if singleton:
            keep = np.arange(self.ell) != old
            occ_centers = self.centers[keep]
            occ_covs = self.covs[keep]
            occ_sizes = self.sizes[keep]
            aux_center = self.centers[old]
            aux_cov = self.covs[old]
        elif self.ell + 1 > cfg.k_max:
            # component budget exhausted: no singleton-creation move
            grow_allowed = False
            occ_centers = self.centers
            occ_covs = self.covs
            occ_sizes = self.sizes.copy()
            occ_sizes[old] -= 1
            aux_center = np.zeros(self.p)
            aux_cov = np.ones(self.p)
        else:
            occ_centers = self.centers
            occ_covs = self.covs
            occ_sizes = self.sizes.copy()
            occ_sizes[old] -= 1
            ell_minus = self.ell
            ks, cum = self.tables.window(
                ell_minus + 1, self.n, cfg.m, cfg, k_cap=cfg.k_max
            )
            k_aux = int(ks[np.searchsorted(cum, self.rng.random() * cum[-1])])
            aux_cov = self._draw_prior_cov(1)[0]
            empties = self._draw_empties_thinned(occ_centers, k_aux - ell_minus)
            aux_center = empties[0]

        ell_minus = occ_centers.shape[0]
        logphi = mvn_diag_logpdf_many(
            y,
            np.vstack([occ_centers, aux_center[None, :]]),
            np.vstack([occ_covs, aux_cov[None, :]]),
        )
        logw = np.empty(ell_minus + 1)
        logw[:ell_minus] = np.log(occ_sizes + cfg.beta) + logphi[:ell_minus]
        if grow_allowed:
            logw[ell_minus] = (
                self.tables.vn.log_ratio(ell_minus) + self.log_beta + logphi[ell_minus]
            )
        else:
            logw[ell_minus] = -np.inf
        w = np.exp(logw - logw.max())
        cw = np.cumsum(w)
        pick = int(np.searchsorted(cw, self.rng.random() * cw[-1]))

        if singleton:
            if pick == ell_minus:
                return  # stays a singleton with its own parameters
            dest = pick if pick < old else pick + 1  # undo the `keep` offset
            self.z[i] = dest
            self.sizes[dest] += 1
            self.sizes[old] -= 1
            self._remove_cluster(old)
        else:
            if pick == ell_minus:
                self.sizes[old] -= 1
                self.z[i] = self.ell
                self.sizes = np.append(self.sizes, 1)
                self._occ_stat = None
                self.centers = np.vstack([self.centers, aux_center[None, :]])
                self.covs = np.vstack([self.covs, aux_cov[None, :]])
            elif pick != old:
                self.sizes[old] -= 1
                self.z[i] = pick
                self.sizes[pick] += 1
        self.k = self.ell
        if self.empty_centers.shape[0]:
            self.empty_centers = np.zeros((0, self.p))
            self.empty_covs = np.zeros((0, self.p))

    def _remove_cluster(self, idx: int) -> None:
        self._occ_stat = None
        last = self.ell - 1
        if idx != last:
            self.z[self.z == last] = idx
            self.centers[idx] = self.centers[last]
            self.covs[idx] = self.covs[last]
            self.sizes[idx] = self.sizes[last]
        self.centers = self.centers[:last]
        self.covs = self.covs[:last]
        self.sizes = self.sizes[:last]

    # -- Step 2: resample K ----------------------------------------------------

    def cluster_moments(self) -> tuple[np.ndarray, np.ndarray]:
        sums = np.zeros((self.ell, self.p))
        np.add.at(sums, self.z, self.y)
        return self.sizes.astype(float), sums

    def _conjugate_proposal(self) -> tuple[np.ndarray, np.ndarray]:
        counts, sums = self.cluster_moments()
        return conjugate_center_posterior(counts, sums, self.covs, self.config.spec.tau)

    def resample_k(self) -> None:
        cfg = self.config
        ell = self.ell
        ks, cum = self.tables.window(ell, self.n, cfg.m, cfg, k_cap=cfg.k_max)
        if len(ks) == 1:
            new_k = int(ks[0])
        else:
            probs = np.diff(np.concatenate([[0.0], cum]))
            log_post = np.log(probs)
            if not cfg.spec.independent:
                mean, var = self._conjugate_proposal()
                sd_occ = np.sqrt(var)
                tau = cfg.spec.tau
                mc = cfg.ztilde_mc
                for j, k_cand in enumerate(ks):
                    e = int(k_cand) - ell
                    draws = np.empty((mc, int(k_cand), self.p))
                    draws[:, :ell, :] = mean + sd_occ * self.rng.standard_normal(
                        (mc, ell, self.p)
                    )
                    if e:
                        draws[:, ell:, :] = tau * self.rng.standard_normal((mc, e, self.p))
                    log_h = _log_h_many(draws, cfg.spec)
                    log_ztilde = float(logsumexp(log_h) - math.log(mc))
                    log_post[j] += log_ztilde - self.tables.log_zk[int(k_cand) - 1]
            if not np.any(np.isfinite(log_post)):
                raise SupportError("every candidate K produced a zero integral estimate")
            w = np.exp(log_post - np.max(log_post))
            cw = np.cumsum(w)
            new_k = int(ks[np.searchsorted(cw, self.rng.random() * cw[-1])])
        extra = new_k - ell
        self.k = new_k
        self.empty_centers = cfg.spec.tau * self.rng.standard_normal((extra, self.p))
        self.empty_covs = self._draw_prior_cov(extra)

    # -- Step 3: covariances -----------------------------------------------------

    def resample_covariances(self) -> None:
        cfg = self.config
        if self.fixed_cov is not None:
            return
        for c in range(self.ell):
            resid = self.y[self.z == c] - self.centers[c]
            ssq = np.sum(resid * resid, axis=0)
            shape = cfg.a0 + 0.5 * self.sizes[c]
            for j in range(self.p):
                self.covs[c, j] = sample_truncated_inv_gamma(
                    shape, cfg.b0 + 0.5 * ssq[j], cfg.sigma_lo_sq, cfg.sigma_hi_sq, self.rng
                )

    # -- Step 4: blocked centers ---------------------------------------------------

    def resample_centers(self) -> None:
        cfg = self.config
        spec = cfg.spec
        mean, var = self._conjugate_proposal()
        sd = np.sqrt(var)
        ell, extra = self.ell, self.k - self.ell
        tau = spec.tau

        def attempt_once(cap: int) -> np.ndarray:
            for _ in range(cap):
                draws = np.empty((self.k, self.p))
                draws[:ell] = mean + sd * self.rng.standard_normal((ell, self.p))
                if extra:
                    draws[ell:] = tau * self.rng.standard_normal((extra, self.p))
                if self.k == 1 or spec.independent:
                    return draws
                log_h = log_repulse_h(draws, spec)
                if log_h == 0.0 or math.log(self.rng.random()) < log_h:
                    return draws
            raise RejectionCapError(cap)

        draws = self._with_retry(attempt_once)
        self._occ_stat = None
        self.centers = draws[:ell]
        self.empty_centers = draws[ell:]

    # -- Step 5: canonical labels ---------------------------------------------------

    def canonicalize(self) -> None:
        relabel = np.full(self.ell, -1, dtype=np.int64)
        order: list[int] = []
        for lab in self.z:
            if relabel[lab] < 0:
                relabel[lab] = len(order)
                order.append(int(lab))
        if order == list(range(self.ell)):
            return
        self.z = relabel[self.z]
        self.centers = self.centers[order]
        self.covs = self.covs[order]
        self.sizes = self.sizes[order]

    def sweep(self) -> None:
        for i in range(self.n):
            self.reassign(i)
        self.resample_k()
        self.resample_covariances()
        self.resample_centers()
        self.canonicalize()

    # -- per-sweep summaries ------------------------------------------------------

    def log_predictive(self) -> np.ndarray:
        """Per-observation log density of the sweep's mixture, with the
        collapsed posterior-mean weights (|c| + beta) / (n + K beta) for
        occupied and beta / (n + K beta) for unoccupied components."""
        cfg = self.config
        denom = self.n + self.k * cfg.beta
        logw = np.concatenate(
            [
                np.log((self.sizes + cfg.beta) / denom),
                np.full(self.k - self.ell, math.log(cfg.beta / denom)),
            ]
        )
        comp = mvn_diag_logpdf_many(
            self.y,
            np.vstack([self.centers, self.empty_centers]),
            np.vstack([self.covs, self.empty_covs]),
        )
        return logsumexp(comp + logw[None, :], axis=1)

    def log_joint(self) -> float:
        """Joint log density of (partition, K, parameters, data)."""
        cfg = self.config
        ell, k, n = self.ell, self.k, self.n
        out = cfg.k_prior.log_pmf(k)
        out += float(gammaln(k + 1) - gammaln(k - ell + 1))
        out += float(gammaln(cfg.beta * k) - gammaln(n + cfg.beta * k))
        out += float(np.sum(gammaln(cfg.beta + self.sizes) - gammaln(cfg.beta)))
        cov_prior = (
            None
            if self.fixed_cov is not None
            else (cfg.a0, cfg.b0, cfg.sigma_lo_sq, cfg.sigma_hi_sq)
        )
        out += joint_prior_logdensity(
            np.vstack([self.centers, self.empty_centers]),
            np.vstack([self.covs, self.empty_covs]),
            cfg.spec,
            float(self.tables.log_zk[k - 1]),
            cov_prior,
        )
        out += float(
            np.sum(mvn_diag_logpdf_many(self.y, self.centers, self.covs)[np.arange(n), self.z])
        )
        return out


def _batched_pair_stat(
    empties: np.ndarray,
    occupied: np.ndarray,
    g0: float,
    min_form: bool,
    fixed_stat: float,
) -> np.ndarray:
    """Per-attempt min (or sum) of log g over all pairs touching the empty
    centers, merged with the precomputed occupied-only statistic.

    empties has shape (B, e, p); occupied (l, p).  Returns (B,)."""
    b, e, _ = empties.shape
    stat = np.full(b, fixed_stat)
    with np.errstate(divide="ignore"):
        for a in range(e - 1):
            diff = empties[:, a + 1 :, :] - empties[:, a : a + 1, :]
            d = np.sqrt(np.sum(diff * diff, axis=-1))
            lg = np.where(d > 0.0, np.log(d) - np.log(g0 + d), -np.inf)
            if min_form:
                stat = np.minimum(stat, lg.min(axis=1))
            else:
                stat += lg.sum(axis=1)
        if occupied.shape[0]:
            diff = empties[:, :, None, :] - occupied[None, None, :, :]
            d = np.sqrt(np.sum(diff * diff, axis=-1))
            lg = np.where(d > 0.0, np.log(d) - np.log(g0 + d), -np.inf)
            if min_form:
                stat = np.minimum(stat, lg.min(axis=(1, 2)))
            else:
                stat += lg.sum(axis=(1, 2))
    return stat


def _pair_stat(a: np.ndarray, b: np.ndarray, spec: RepulsionSpec, within: bool) -> float:
    """min (or sum) of log g over pairs within `a` or across `a` x `b`."""
    if within:
        if a.shape[0] < 2:
            return math.inf if spec.form == "min_pairwise" else 0.0
        diffs = a[:, None, :] - a[None, :, :]
        d = np.sqrt(np.sum(diffs * diffs, axis=-1))
        iu = np.triu_indices(a.shape[0], k=1)
        d = d[iu]
    else:
        if a.shape[0] == 0 or b.shape[0] == 0:
            return math.inf if spec.form == "min_pairwise" else 0.0
        diffs = a[:, None, :] - b[None, :, :]
        d = np.sqrt(np.sum(diffs * diffs, axis=-1)).ravel()
    with np.errstate(divide="ignore"):
        log_g = np.where(d > 0.0, np.log(d) - np.log(spec.g0 + d), -np.inf)
    return float(np.min(log_g)) if spec.form == "min_pairwise" else float(np.sum(log_g))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def conjugate_center_posterior(counts, sums, covs, tau: float):
    """Coordinatewise posterior of cluster centers given members and
    eigenvalues: variance 1 / (n_c / lambda + 1 / tau^2) and mean
    variance * sum_y / lambda.  counts is (ell,), sums and covs (ell, p)."""
    counts = np.asarray(counts, dtype=float)
    sums = np.asarray(sums, dtype=float)
    covs = np.asarray(covs, dtype=float)
    var = 1.0 / (counts[:, None] / covs + 1.0 / tau**2)
    mean = var * sums / covs
    return mean, var


def init_state(data: Dataset, config: ModelConfig, k_init: int, rng) -> MixtureState:
    """Prior-drawn centers, unit covariances clipped into bounds, and a
    maximum-likelihood hard assignment; unused components are dropped."""
    eng = _Engine(data, config, _placeholder_tables(data.n, config), rng)
    eng.init(k_init)
    return eng.to_state()


def _placeholder_tables(n: int, config: ModelConfig) -> ChainTables:
    # init touches neither table; a one-row V_n table keeps this cheap
    return ChainTables(
        vn=compute_vn_table(n, config.beta, config.k_prior, ell_max=1),
        log_zk=np.zeros(config.k_max),
    )


def _engine_for(state, data, config, tables, rng) -> _Engine:
    eng = _Engine(data, config, tables, rng)
    eng.load_state(state)
    return eng


def reassign_step(
    state: MixtureState, i: int, data: Dataset, config: ModelConfig, tables: ChainTables, rng
) -> MixtureState:
    """One auxiliary-variable reseating move for observation i."""
    eng = _engine_for(state, data, config, tables, rng)
    eng.reassign(i)
    return eng.to_state()


def resample_k_step(
    state: MixtureState, data: Dataset, config: ModelConfig, tables: ChainTables, rng
) -> MixtureState:
    """Redraw K over the window {ell..ell+m} with Monte Carlo repulsion
    integrals, and refresh the unoccupied component slots."""
    eng = _engine_for(state, data, config, tables, rng)
    eng.resample_k()
    return eng.to_state()


def resample_covariances_step(
    state: MixtureState, data: Dataset, config: ModelConfig, tables: ChainTables, rng
) -> MixtureState:
    """Truncated conjugate inverse-gamma update of every occupied cluster."""
    eng = _engine_for(state, data, config, tables, rng)
    eng.resample_covariances()
    return eng.to_state()


def resample_centers_step(
    state: MixtureState, data: Dataset, config: ModelConfig, tables: ChainTables, rng
) -> MixtureState:
    """Blocked accept-reject update of all K centers."""
    eng = _engine_for(state, data, config, tables, rng)
    eng.resample_centers()
    return eng.to_state()


def _drive(
    data: Dataset,
    config: ModelConfig,
    n_sweeps: int,
    seed,
    tables: ChainTables | None,
    zk_cache_dir: str | None,
):
    rng_tables, rng_chain = [
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    ]
    if tables is None:
        tables = build_chain_tables(
            data.n, data.p, config, rng=rng_tables, zk_cache_dir=zk_cache_dir
        )
    eng = _Engine(data, config, tables, rng_chain)
    try:
        eng.init(config.k_init)
    except Exception as exc:  # noqa: BLE001 - wrapped with sweep index 0
        raise ChainError(0, exc) from exc
    for it in range(1, n_sweeps + 1):
        try:
            eng.sweep()
        except Exception as exc:  # noqa: BLE001
            raise ChainError(it, exc) from exc
        yield it, eng


def iter_sweeps(
    data: Dataset,
    config: ModelConfig,
    n_sweeps: int,
    seed,
    tables: ChainTables | None = None,
    zk_cache_dir: str | None = None,
):
    """Run the chain and yield (iteration, MixtureState) after every sweep.

    Sweeps are numbered 1..n_sweeps.  The Z_K Monte Carlo uses a generator
    spawned separately from the chain's so cached tables do not shift the
    chain's stream."""
    for it, eng in _drive(data, config, n_sweeps, seed, tables, zk_cache_dir):
        yield it, eng.to_state()


def run_chain(
    data: Dataset,
    config: ModelConfig,
    n_sweeps: int,
    burn_in: int,
    thin: int = 1,
    seed=0,
    tables: ChainTables | None = None,
    zk_cache_dir: str | None = None,
    validate_every_sweep: bool = False,
) -> Trace:
    """Full chain driver: init, n_sweeps sweeps, post-burn-in thinned
    snapshots with per-observation log predictive densities recorded."""
    if not (0 <= burn_in < n_sweeps):
        raise SupportError(f"need 0 <= burn_in < n_sweeps, got {burn_in}, {n_sweeps}")
    if thin < 1:
        raise SupportError(f"thin must be >= 1, got {thin}")
    start = time.perf_counter()
    trace = Trace(
        TraceMeta(
            seed=seed if isinstance(seed, int) else None,
            config_hash=config.content_hash(),
            n=data.n,
            p=data.p,
            n_sweeps=n_sweeps,
            burn_in=burn_in,
            thin=thin,
        )
    )
    for it, eng in _drive(data, config, n_sweeps, seed, tables, zk_cache_dir):
        if it > burn_in and (it - burn_in - 1) % thin == 0:
            state = eng.to_state()
            if validate_every_sweep:
                state.validate(config)
            trace.append(it, state, eng.log_predictive())
        elif validate_every_sweep:
            eng.to_state().validate(config)
    trace.meta.elapsed_s = time.perf_counter() - start
    return trace


def state_log_joint(
    state: MixtureState, data: Dataset, config: ModelConfig, tables: ChainTables
) -> float:
    """Joint log density of a state; finite whenever centers are distinct."""
    eng = _engine_for(state, data, config, tables, np.random.default_rng(0))
    return eng.log_joint()

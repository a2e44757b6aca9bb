"""Elementary densities and samplers: diagonal Gaussians, truncated
inverse-gamma, and the zero-truncated Poisson prior on the number of
mixture components (plain or adjusted by the repulsion normalizers)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DimensionError, RejectionCapError, SupportError

LOG_2PI = math.log(2.0 * math.pi)

_INV_GAMMA_RETRY_CAP = 10**6


def mvn_diag_logpdf(y, mu, lambdas) -> float:
    """Log density of N(mu, diag(lambdas)) at y.

    All three arguments are length-p arrays (p >= 1).
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    if not (y.shape == mu.shape == lam.shape):
        raise DimensionError(
            f"shape mismatch: y {y.shape}, mu {mu.shape}, lambdas {lam.shape}"
        )
    if np.any(lam <= 0.0):
        raise SupportError("covariance eigenvalues must be positive")
    resid = y - mu
    return float(-0.5 * np.sum(LOG_2PI + np.log(lam) + resid * resid / lam))


def mvn_diag_logpdf_many(y, mus, lams) -> np.ndarray:
    """Log density of y under several diagonal Gaussians at once.

    y is (p,) or (n, p); mus and lams are (k, p). Returns (k,) or (n, k).
    """
    y = np.asarray(y, dtype=float)
    mus = np.asarray(mus, dtype=float)
    lams = np.asarray(lams, dtype=float)
    const = -0.5 * np.sum(LOG_2PI + np.log(lams), axis=-1)
    if y.ndim == 1:
        resid = y[None, :] - mus
        return const - 0.5 * np.sum(resid * resid / lams, axis=-1)
    resid = y[:, None, :] - mus[None, :, :]
    return const[None, :] - 0.5 * np.sum(resid * resid / lams[None, :, :], axis=-1)


def trunc_inv_gamma_logpdf(x, a: float, b: float, lo: float, hi: float):
    """Normalized log density of the inverse-gamma(a, b) restricted to [lo, hi].

    The density is proportional to x^{-a-1} exp(-b/x) on [lo, hi] and the
    normalizer is evaluated through the regularized incomplete gamma of 1/x.
    """
    _check_trunc_inv_gamma_args(a, b, lo, hi)
    x = np.asarray(x, dtype=float)
    mass = special.gammainc(a, b / lo) - special.gammainc(a, b / hi)
    if mass <= 0.0:
        raise SupportError(
            f"truncation window [{lo}, {hi}] carries no numerical mass for a={a}, b={b}"
        )
    log_norm = special.gammaln(a) - a * math.log(b) + math.log(mass)
    out = np.where(
        (x >= lo) & (x <= hi),
        (-a - 1.0) * np.log(x) - b / x - log_norm,
        -np.inf,
    )
    return float(out) if out.ndim == 0 else out


def sample_truncated_inv_gamma(a: float, b: float, lo: float, hi: float, rng, size=None):
    """Draw from the inverse-gamma(a, b) density restricted to [lo, hi].

    Works through the gamma law of 1/x: the CDF window is inverted with
    gammaincinv, switching to the survival-function parameterization when
    the window sits in the far right tail.  If the window mass underflows
    in both parameterizations, falls back to rejection from the full
    inverse-gamma with a retry cap.
    """
    _check_trunc_inv_gamma_args(a, b, lo, hi)
    # 1/x ~ Gamma(a, rate=b) on [b/hi, b/lo] in standardized units.
    t_lo, t_hi = b / hi, b / lo
    p_lo = special.gammainc(a, t_lo)
    p_hi = special.gammainc(a, t_hi)
    q_lo = special.gammaincc(a, t_lo)
    q_hi = special.gammaincc(a, t_hi)
    # pick whichever tail parameterization resolves the window best in
    # relative terms; deep-tail windows are fine as long as the endpoint
    # probabilities do not collide at double precision
    tiny = np.finfo(float).tiny
    rel_cdf = (p_hi - p_lo) / max(p_hi, tiny)
    rel_sf = (q_lo - q_hi) / max(q_lo, tiny)
    if max(rel_cdf, rel_sf) <= 1e-12:
        return _rejection_inv_gamma(a, b, lo, hi, rng, size)
    u = rng.random(size)
    if rel_cdf >= rel_sf:
        t = special.gammaincinv(a, p_lo + u * (p_hi - p_lo))
    else:
        t = special.gammainccinv(a, q_hi + u * (q_lo - q_hi))
    x = b / np.clip(t, np.nextafter(0.0, 1.0), np.inf)
    x = np.clip(x, lo, hi)
    return float(x) if size is None else x


def _rejection_inv_gamma(a, b, lo, hi, rng, size):
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    filled = 0
    attempts = 0
    while filled < n:
        block = max(1024, n - filled)
        attempts += block
        if attempts > _INV_GAMMA_RETRY_CAP:
            raise RejectionCapError(
                attempts,
                f"truncated inverse-gamma window [{lo}, {hi}] too improbable "
                f"for a={a}, b={b}",
            )
        draws = b / rng.gamma(a, size=block)
        keep = draws[(draws >= lo) & (draws <= hi)]
        take = min(len(keep), n - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    if size is None:
        return float(out[0])
    return out.reshape(size)


def _check_trunc_inv_gamma_args(a, b, lo, hi):
    if a <= 0.0 or b <= 0.0:
        raise SupportError(f"inverse-gamma parameters must be positive, got a={a}, b={b}")
    if not (0.0 < lo < hi):
        raise SupportError(f"truncation window must satisfy 0 < lo < hi, got [{lo}, {hi}]")


@dataclass(frozen=True)
class KPrior:
    """Zero-truncated Poisson prior on the number of components K >= 1.

    mode "plain": pmf(k) proportional to intensity^k / k!.
    mode "zk": pmf(k) proportional to Z_k * intensity^k / k!, where log Z_k
    comes from ``log_zk_table`` (index 0 holds k=1); support is truncated to
    the table extent and the pmf renormalized over it.
    """

    intensity: float = 1.0
    mode: str = "plain"
    log_zk_table: tuple[float, ...] | None = None
    _log_norm: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        if self.intensity <= 0.0:
            raise SupportError(f"intensity must be positive, got {self.intensity}")
        if self.mode not in ("plain", "zk"):
            raise SupportError(f"unknown KPrior mode {self.mode!r}")
        if self.mode == "zk":
            if self.log_zk_table is None or len(self.log_zk_table) == 0:
                raise SupportError("mode 'zk' requires a log_zk_table")
            object.__setattr__(
                self, "log_zk_table", tuple(float(v) for v in self.log_zk_table)
            )
            table = np.asarray(self.log_zk_table, dtype=float)
            ks = np.arange(1, len(table) + 1)
            terms = table + ks * math.log(self.intensity) - special.gammaln(ks + 1)
            object.__setattr__(self, "_log_norm", float(special.logsumexp(terms)))
        else:
            lam = self.intensity
            # log(e^lam - 1), stable for small lam
            object.__setattr__(self, "_log_norm", lam + math.log1p(-math.exp(-lam)))

    @property
    def support_max(self) -> int | None:
        """Largest k with positive mass, or None when unbounded."""
        if self.mode == "zk":
            return len(self.log_zk_table)
        return None

    def log_pmf(self, k: int) -> float:
        if k < 1:
            raise SupportError(f"K prior is zero-truncated; got k={k}")
        if self.mode == "zk":
            if k > len(self.log_zk_table):
                raise SupportError(
                    f"k={k} outside the Z_K table range 1..{len(self.log_zk_table)}"
                )
            base = self.log_zk_table[k - 1]
        else:
            base = 0.0
        return base + k * math.log(self.intensity) - float(special.gammaln(k + 1)) - self._log_norm

"""Exchangeable partition calculus for mixtures with a prior on the number
of components: the V_n coefficient table, the marginal partition prior, the
windowed conditional draw of K given a partition, and brute-force oracles
over small sample sizes."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DimensionError, SeriesError, SupportError

_MAX_SERIES_TERMS = 10**6
_QUIET_TERMS = 50  # consecutive negligible terms before the series stops

_BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597]


@dataclass(frozen=True)
class Partition:
    """Set partition of {0..n-1} as a canonical assignment vector.

    Labels follow order of first appearance: assignment[0] is 0, and each
    new cluster takes the smallest unused label.
    """

    assignments: tuple[int, ...]
    sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        a = self.assignments
        if len(a) == 0:
            raise SupportError("a partition needs at least one element")
        seen: dict[int, int] = {}
        for lab in a:
            if lab not in seen:
                if lab != len(seen):
                    raise SupportError(
                        "assignments must use first-appearance labels 0..l-1"
                    )
                seen[lab] = 0
            seen[lab] += 1
        object.__setattr__(self, "sizes", tuple(seen[j] for j in range(len(seen))))

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Canonicalize an arbitrary label vector."""
        relabel: dict = {}
        out = []
        for lab in labels:
            key = int(lab)
            if key not in relabel:
                relabel[key] = len(relabel)
            out.append(relabel[key])
        return cls(tuple(out))

    @property
    def n(self) -> int:
        return len(self.assignments)

    @property
    def ell(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class VnTable:
    """log V_n(l) for l = 1..ell_max under a given K prior and beta."""

    n: int
    beta: float
    log_vn: tuple[float, ...]
    tol: float

    def log_ratio(self, ell: int) -> float:
        """log[V_n(ell + 1) / V_n(ell)]."""
        return self.value(ell + 1) - self.value(ell)

    def value(self, ell: int) -> float:
        if not (1 <= ell <= len(self.log_vn)):
            raise SupportError(
                f"ell={ell} outside the table range 1..{len(self.log_vn)}"
            )
        return self.log_vn[ell - 1]


def _log_vn_term(k: int, ell: int, n: int, beta: float, prior) -> float:
    """log of the K-th series term: falling(K, ell) / rising(beta K, n) * pmf(K)."""
    if k < ell:
        return -np.inf
    falling = gammaln(k + 1) - gammaln(k - ell + 1)
    rising = gammaln(beta * k + n) - gammaln(beta * k)
    return float(falling - rising + prior.log_pmf(k))


def compute_vn_table(n: int, beta: float, prior, ell_max: int, tol: float = 1e-12) -> VnTable:
    """Sum the V_n(l) series for l = 1..ell_max in log space.

    The series over K stops once 50 consecutive terms each contribute less
    than ``tol`` relative to the running sum (the terms are eventually
    dominated by the factorially decaying prior tail), or at the prior's
    support bound when it is finite.
    """
    if not (1 <= ell_max <= n):
        raise SupportError(f"need 1 <= ell_max <= n, got ell_max={ell_max}, n={n}")
    if tol <= 0.0:
        raise SupportError("tol must be positive")
    if beta <= 0.0:
        raise SupportError("beta must be positive")
    k_cap = prior.support_max
    log_tol = math.log(tol)
    values = []
    for ell in range(1, ell_max + 1):
        total = -np.inf
        quiet = 0
        k = ell
        terms = 0
        while True:
            if k_cap is not None and k > k_cap:
                break
            t = _log_vn_term(k, ell, n, beta, prior)
            total = np.logaddexp(total, t)
            if np.isfinite(total) and t - total < log_tol:
                quiet += 1
                if quiet >= _QUIET_TERMS:
                    break
            else:
                quiet = 0
            k += 1
            terms += 1
            if terms > _MAX_SERIES_TERMS:
                raise SeriesError(
                    f"V_n series for ell={ell} did not settle within {_MAX_SERIES_TERMS} terms"
                )
        values.append(float(total))
    return VnTable(n=n, beta=beta, log_vn=tuple(values), tol=tol)


def log_partition_prior(part: Partition, table: VnTable, beta: float) -> float:
    """log p(partition) = log V_n(l) + sum over clusters of
    log Gamma(beta + |c|) - log Gamma(beta)."""
    if part.n != table.n:
        raise DimensionError(f"partition has n={part.n} but table has n={table.n}")
    if part.ell > len(table.log_vn):
        raise SupportError(f"table covers ell <= {len(table.log_vn)}, got {part.ell}")
    sizes = np.asarray(part.sizes, dtype=float)
    return table.value(part.ell) + float(np.sum(gammaln(beta + sizes) - gammaln(beta)))


def log_k_weight_urn(k: int, ell: int, n: int) -> float:
    """log of the windowed weight K! / ((K + n)! (K - ell)!); zero weight
    below K = ell."""
    if k < ell:
        return -np.inf
    return float(gammaln(k + 1) - gammaln(k + n + 1) - gammaln(k - ell + 1))


def log_k_weight_exact(k: int, ell: int, n: int, beta: float, prior) -> float:
    """log of pmf(K) * falling(K, ell) / rising(beta K, n), the conditional
    weight of K given an ell-cluster partition of n items."""
    return _log_vn_term(k, ell, n, beta, prior)


def k_window_weights(
    ell: int,
    n: int,
    m: int,
    *,
    beta: float | None = None,
    prior=None,
    exact: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized weights of K over the window {ell, ..., ell + m}.

    With ``exact`` the weights use the K prior and beta; otherwise the
    fixed urn form K!/((K+n)!(K-ell)!).  K values beyond a finite prior
    support are dropped from the window.
    """
    if ell < 1:
        raise SupportError(f"ell must be >= 1, got {ell}")
    if m < 0:
        raise SupportError(f"m must be >= 0, got {m}")
    ks = np.arange(ell, ell + m + 1)
    if exact:
        if beta is None or prior is None:
            raise SupportError("exact window weights need beta and the K prior")
        cap = prior.support_max
        if cap is not None:
            ks = ks[ks <= cap]
            if len(ks) == 0:
                raise SupportError(
                    f"no K in the window {ell}..{ell + m} lies inside the prior support"
                )
        logw = np.array([log_k_weight_exact(int(k), ell, n, beta, prior) for k in ks])
    else:
        logw = np.array([log_k_weight_urn(int(k), ell, n) for k in ks])
    probs = np.exp(logw - logsumexp(logw))
    probs /= probs.sum()
    return ks, probs


@functools.lru_cache(maxsize=4096)
def _urn_window_cumulative(ell: int, n: int, m: int):
    ks, probs = k_window_weights(ell, n, m)
    return ks, np.cumsum(probs)


def sample_k_given_partition(ell: int, n: int, m: int, rng) -> int:
    """Draw K from the urn weights K!/((K+n)!(K-ell)!) on {ell..ell+m}."""
    if m == 0:
        if ell < 1:
            raise SupportError(f"ell must be >= 1, got {ell}")
        return ell
    ks, cum = _urn_window_cumulative(ell, n, m)
    return int(ks[np.searchsorted(cum, rng.random() * cum[-1])])


def enumerate_set_partitions(n: int):
    """All set partitions of {0..n-1} in canonical label order (n <= 12)."""
    if not (1 <= n <= 12):
        raise SupportError(f"enumeration supported for 1 <= n <= 12, got {n}")
    out: list[Partition] = []

    def grow(prefix: list[int], used: int):
        if len(prefix) == n:
            out.append(Partition(tuple(prefix)))
            return
        for lab in range(used + 1):
            prefix.append(lab)
            grow(prefix, max(used, lab + 1))
            prefix.pop()

    grow([0], 1)
    assert len(out) == _BELL[n]
    return out


def bruteforce_partition_prior(
    n: int,
    beta: float,
    prior,
    k_max: int,
    *,
    tail_tol: float = 1e-10,
    enumerate_limit: int = 50_000,
) -> dict[tuple[int, ...], float]:
    """Per-partition prior probabilities by direct marginalization of the
    component-labeling model over K <= k_max.

    For each K the labeling sum is taken literally over all K^n label
    vectors while K^n <= enumerate_limit, and through the injective-count
    shortcut (falling factorial) beyond that.  Fails when the prior mass
    above k_max exceeds tail_tol.
    """
    if not (1 <= n <= 8):
        raise SupportError(f"brute force supported for 1 <= n <= 8, got {n}")
    cap = prior.support_max
    if cap is not None:
        k_max = min(k_max, cap)
        tail = 0.0
    else:
        tail = 1.0 - sum(math.exp(prior.log_pmf(k)) for k in range(1, k_max + 1))
    if tail > tail_tol:
        raise SeriesError(
            f"prior tail beyond k_max={k_max} is {tail:.3e} > {tail_tol:.1e}"
        )

    totals: dict[tuple[int, ...], float] = {
        p.assignments: 0.0 for p in enumerate_set_partitions(n)
    }
    for k in range(1, k_max + 1):
        pk = math.exp(prior.log_pmf(k))
        base = gammaln(beta * k) - gammaln(n + beta * k)
        if k**n <= enumerate_limit:
            for z in itertools.product(range(k), repeat=n):
                counts = [0] * k
                for lab in z:
                    counts[lab] += 1
                logw = base + sum(
                    gammaln(beta + c) - gammaln(beta) for c in counts if c > 0
                )
                key = Partition.from_labels(z).assignments
                totals[key] += pk * math.exp(logw)
        else:
            for part in totals:
                ell = max(part) + 1
                if k < ell:
                    continue
                count = gammaln(k + 1) - gammaln(k - ell + 1)
                sizes = Partition(part).sizes
                logw = base + count + sum(gammaln(beta + c) - gammaln(beta) for c in sizes)
                totals[part] += pk * math.exp(logw)
    mass = sum(totals.values())
    if abs(mass - 1.0) > 1e-8 + tail_tol:
        raise SeriesError(f"brute-force probabilities sum to {mass}, not 1")
    return totals

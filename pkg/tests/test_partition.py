import math

import numpy as np
import pytest
from scipy.stats import chi2

from rgmix.distributions import KPrior
from rgmix.errors import DimensionError, SupportError
from rgmix.partition import (
    Partition,
    bruteforce_partition_prior,
    compute_vn_table,
    enumerate_set_partitions,
    k_window_weights,
    log_k_weight_exact,
    log_partition_prior,
    sample_k_given_partition,
)


def degenerate_prior(k0: int, span: int = 10) -> KPrior:
    """Point mass at k0 expressed through the Z_K-adjusted mode."""
    table = tuple(0.0 if k == k0 else -np.inf for k in range(1, span + 1))
    return KPrior(intensity=1.0, mode="zk", log_zk_table=table)


class TestPartitionType:
    def test_canonical_enforced(self):
        Partition((0, 1, 0, 2))
        with pytest.raises(SupportError):
            Partition((1, 0))
        with pytest.raises(SupportError):
            Partition((0, 2))

    def test_from_labels(self):
        part = Partition.from_labels([7, 3, 7, 1])
        assert part.assignments == (0, 1, 0, 2)
        assert part.sizes == (2, 1, 1)
        assert part.ell == 3 and part.n == 4


class TestVnTable:
    def test_degenerate_prior_single_term(self):
        # prior mass only at K=1: V_1(1) = 1/(beta*1) * 1 = 1 at beta=1
        table = compute_vn_table(1, 1.0, degenerate_prior(1), ell_max=1)
        assert table.value(1) == pytest.approx(0.0, abs=1e-12)

    def test_ell_beyond_prior_support(self):
        table = compute_vn_table(3, 1.0, degenerate_prior(2), ell_max=3)
        assert table.value(3) == -math.inf
        assert np.isfinite(table.value(2))

    def test_normalization_via_enumeration(self):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(3, 1.0, prior, ell_max=3)
        total = sum(
            math.exp(log_partition_prior(p, table, 1.0))
            for p in enumerate_set_partitions(3)
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_halving_tol_stable(self):
        prior = KPrior(intensity=2.0)
        a = compute_vn_table(6, 0.7, prior, ell_max=6, tol=1e-10)
        b = compute_vn_table(6, 0.7, prior, ell_max=6, tol=5e-11)
        for ell in range(1, 7):
            assert abs(a.value(ell) - b.value(ell)) <= 1e-10 * abs(a.value(ell))

    def test_prefix_stability(self):
        prior = KPrior(intensity=1.0)
        small = compute_vn_table(5, 1.0, prior, ell_max=3)
        large = compute_vn_table(5, 1.0, prior, ell_max=5)
        assert small.log_vn == large.log_vn[:3]

    def test_bad_args(self):
        prior = KPrior(intensity=1.0)
        with pytest.raises(SupportError):
            compute_vn_table(3, 1.0, prior, ell_max=4)
        with pytest.raises(SupportError):
            compute_vn_table(3, 1.0, prior, ell_max=2, tol=0.0)


class TestLogPartitionPrior:
    def test_single_observation(self):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(1, 1.0, prior, ell_max=1)
        assert log_partition_prior(Partition((0,)), table, 1.0) == pytest.approx(0.0, abs=1e-10)

    def test_two_observations_normalize(self):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(2, 1.0, prior, ell_max=2)
        p_merge = math.exp(log_partition_prior(Partition((0, 0)), table, 1.0))
        p_split = math.exp(log_partition_prior(Partition((0, 1)), table, 1.0))
        assert p_merge + p_split == pytest.approx(1.0, abs=1e-8)

    def test_exchangeability(self, rng):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(6, 0.5, prior, ell_max=6)
        labels = [0, 0, 1, 2, 1, 0]
        base = log_partition_prior(Partition.from_labels(labels), table, 0.5)
        for _ in range(10):
            perm = rng.permutation(6)
            shuffled = Partition.from_labels([labels[j] for j in perm])
            assert log_partition_prior(shuffled, table, 0.5) == pytest.approx(base, rel=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    @pytest.mark.parametrize("lam", [1.0, 3.0])
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_normalization_sweep(self, n, beta, lam):
        prior = KPrior(intensity=lam)
        table = compute_vn_table(n, beta, prior, ell_max=n)
        total = sum(
            math.exp(log_partition_prior(p, table, beta))
            for p in enumerate_set_partitions(n)
        )
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_matches_bruteforce_n4(self):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(4, 1.0, prior, ell_max=4)
        brute = bruteforce_partition_prior(4, 1.0, prior, k_max=20)
        for part in enumerate_set_partitions(4):
            mine = math.exp(log_partition_prior(part, table, 1.0))
            assert mine == pytest.approx(brute[part.assignments], rel=1e-6)

    def test_dimension_errors(self):
        prior = KPrior(intensity=1.0)
        table = compute_vn_table(3, 1.0, prior, ell_max=2)
        with pytest.raises(DimensionError):
            log_partition_prior(Partition((0, 0)), table, 1.0)
        with pytest.raises(SupportError):
            log_partition_prior(Partition((0, 1, 2)), table, 1.0)

    def test_restaurant_consistency(self):
        # grow partitions one item at a time with the reseating ratios and
        # compare empirical frequencies at n=4 against the marginal prior
        beta, lam, n, reps = 1.0, 1.0, 4, 10**6
        prior = KPrior(intensity=lam)
        tables = {j: compute_vn_table(j, beta, prior, ell_max=j) for j in range(2, n + 1)}
        rng = np.random.default_rng(5150)

        codes = np.zeros(reps, dtype=np.int64)  # growth strings base-n
        sizes = np.zeros((reps, n), dtype=np.int64)
        sizes[:, 0] = 1
        ells = np.ones(reps, dtype=np.int64)
        for j in range(2, n + 1):
            table = tables[j]
            ratios = np.array(
                [math.exp(table.log_ratio(ell)) * beta for ell in range(1, j)]
            )
            w = sizes[:, : j - 1] + beta
            w = np.where(np.arange(j - 1)[None, :] < ells[:, None], w, 0.0)
            new_w = ratios[ells - 1]
            full = np.column_stack([w, new_w])
            cum = np.cumsum(full, axis=1)
            u = rng.random(reps) * cum[:, -1]
            choice = (u[:, None] >= cum).sum(axis=1)
            made_new = choice >= ells
            choice = np.where(made_new, ells, choice)
            sizes[np.arange(reps), choice] += 1
            ells += made_new
            codes = codes * n + choice

        counts: dict[int, int] = {}
        for c in codes:
            counts[int(c)] = counts.get(int(c), 0) + 1

        table = tables[n]
        stat = 0.0
        total_cells = 0
        for part in enumerate_set_partitions(n):
            code = 0
            for lab in part.assignments[1:]:
                code = code * n + lab
            expected = reps * math.exp(log_partition_prior(part, table, beta))
            observed = counts.get(code, 0)
            stat += (observed - expected) ** 2 / expected
            total_cells += 1
        assert stat < chi2.ppf(0.99, df=total_cells - 1)


class TestSampleKGivenPartition:
    def test_m0_deterministic(self, rng):
        for ell in (1, 3, 7):
            assert sample_k_given_partition(ell, 10, 0, rng) == ell

    def test_unnormalized_weights_example(self):
        ks, probs = k_window_weights(1, 2, 2)
        raw = np.array([1 / 6, 1 / 12, 1 / 40])
        assert list(ks) == [1, 2, 3]
        np.testing.assert_allclose(probs, raw / raw.sum(), rtol=1e-12)

    def test_frequencies_match_weights(self):
        rng = np.random.default_rng(77)
        ell, n, m, reps = 2, 6, 3, 10**6
        ks, probs = k_window_weights(ell, n, m)
        draws = np.array([sample_k_given_partition(ell, n, m, rng) for _ in range(reps)])
        stat = 0.0
        for k, p in zip(ks, probs):
            expected = reps * p
            observed = int(np.sum(draws == k))
            stat += (observed - expected) ** 2 / expected
        assert stat < chi2.ppf(0.99, df=len(ks) - 1)

    def test_exact_weights_formula(self):
        prior = KPrior(intensity=1.0)
        ks, probs = k_window_weights(1, 2, 2, beta=1.0, prior=prior, exact=True)
        raw = np.array(
            [math.exp(log_k_weight_exact(int(k), 1, 2, 1.0, prior)) for k in ks]
        )
        np.testing.assert_allclose(probs, raw / raw.sum(), rtol=1e-12)
        # hand evaluation: pmf(K)/K! falling/rising at beta=1, lambda=1
        hand = np.array([1 / 2, 1 / 6, 1 / 24])
        np.testing.assert_allclose(probs, hand / hand.sum(), rtol=1e-12)

    def test_exact_weights_respect_support(self):
        prior = degenerate_prior(2, span=2)
        ks, probs = k_window_weights(2, 5, 3, beta=1.0, prior=prior, exact=True)
        assert list(ks) == [2]
        assert probs[0] == pytest.approx(1.0)


class TestEnumerateSetPartitions:
    @pytest.mark.parametrize("n,count", [(1, 1), (3, 5), (5, 52), (8, 4140)])
    def test_bell_counts(self, n, count):
        parts = enumerate_set_partitions(n)
        assert len(parts) == count
        assert len({p.assignments for p in parts}) == count

    def test_rejects_large_n(self):
        with pytest.raises(SupportError):
            enumerate_set_partitions(13)


class TestBruteforce:
    def test_single_observation(self):
        prior = KPrior(intensity=1.0)
        out = bruteforce_partition_prior(1, 1.0, prior, k_max=20)
        assert out[(0,)] == pytest.approx(1.0, abs=1e-10)

    def test_two_observations_sum(self):
        prior = KPrior(intensity=1.0)
        out = bruteforce_partition_prior(2, 1.0, prior, k_max=20)
        assert sum(out.values()) == pytest.approx(1.0, abs=1e-8)

    def test_insufficient_kmax_detected(self):
        prior = KPrior(intensity=3.0)
        with pytest.raises(Exception):
            bruteforce_partition_prior(3, 1.0, prior, k_max=4)

    def test_shortcut_matches_enumeration(self):
        # same answer whether labelings are enumerated or counted
        prior = KPrior(intensity=1.0)
        full = bruteforce_partition_prior(3, 0.5, prior, k_max=16, enumerate_limit=10**6)
        shortcut = bruteforce_partition_prior(3, 0.5, prior, k_max=16, enumerate_limit=0)
        for key, val in full.items():
            assert shortcut[key] == pytest.approx(val, rel=1e-10)

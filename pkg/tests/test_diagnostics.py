import math

import numpy as np
import pytest

from rgmix.datasets import Dataset, scenario_density
from rgmix.diagnostics import (
    DensityGrid,
    autocorrelation,
    coclustering,
    log_cpo,
    posterior_k_distribution,
    predictive_density_grid,
    shrinkage_constant,
    write_grid_csv,
)
from rgmix.errors import DimensionError, SupportError
from rgmix.partition import Partition
from rgmix.sampler import MixtureState, Trace


def trace_from_states(states, log_preds=None):
    trace = Trace()
    for t, state in enumerate(states):
        lp = None if log_preds is None else log_preds[t]
        trace.append(t + 1, state, lp)
    return trace


def one_cluster_state(center, cov, n):
    return MixtureState(
        part=Partition((0,) * n),
        centers=np.array([center], dtype=float),
        covs=np.array([cov], dtype=float),
        k=1,
        empty_centers=np.zeros((0, len(center))),
        empty_covs=np.zeros((0, len(center))),
    )


class TestLogCpo:
    def test_direct_two_sweep_example(self):
        # one observation, predictive densities 0.2 and 0.6 -> log 0.4
        data = Dataset(obs=np.array([[0.0]]))
        states = [one_cluster_state([0.0], [1.0], 1) for _ in range(2)]
        lps = [np.array([math.log(0.2)]), np.array([math.log(0.6)])]
        trace = trace_from_states(states, lps)
        assert log_cpo(trace, data) == pytest.approx(math.log(0.4), rel=1e-12)

    def test_constant_density(self):
        data = Dataset(obs=np.zeros((3, 1)) + [[0.0], [1.0], [2.0]])
        d = 0.37
        states = [one_cluster_state([0.0], [1.0], 3) for _ in range(4)]
        lps = [np.full(3, math.log(d)) for _ in range(4)]
        trace = trace_from_states(states, lps)
        assert log_cpo(trace, data) == pytest.approx(3 * math.log(d), rel=1e-12)

    def test_permutation_invariance(self, rng):
        n = 6
        data = Dataset(obs=rng.normal(size=(n, 1)))
        states = [one_cluster_state([0.0], [1.0], n) for _ in range(3)]
        lps = [rng.normal(size=n) for _ in range(3)]
        trace = trace_from_states(states, lps)
        base = log_cpo(trace, data)
        perm = rng.permutation(n)
        data2 = Dataset(obs=data.obs[perm])
        trace2 = trace_from_states(states, [lp[perm] for lp in lps])
        assert log_cpo(trace2, data2) == pytest.approx(base, rel=1e-12)

    def test_zero_density_warns(self):
        data = Dataset(obs=np.array([[0.0]]))
        states = [one_cluster_state([0.0], [1.0], 1)]
        trace = trace_from_states(states, [np.array([-math.inf])])
        with pytest.warns(UserWarning):
            assert log_cpo(trace, data) == -math.inf

    def test_recompute_matches_recorded(self, rng):
        # recorded per-sweep predictive values equal recomputation from state
        from rgmix.sampler import ModelConfig, run_chain
        from rgmix.repulsion import RepulsionSpec

        data = Dataset(obs=rng.normal(size=(10, 2)))
        cfg = ModelConfig(spec=RepulsionSpec(g0=0.0, tau=4.0), m=1, k_max=6, zk_mc=1000, ztilde_mc=50)
        trace = run_chain(data, cfg, 8, 4, seed=3)
        recorded = log_cpo(trace, data)
        trace.log_pred = [None] * len(trace)
        assert log_cpo(trace, data) == pytest.approx(recorded, rel=1e-12)


class TestPredictiveDensityGrid:
    def test_single_gaussian_sweep(self):
        state = one_cluster_state([0.0, 0.0], [1.0, 1.0], 5)
        trace = trace_from_states([state])
        axes = [np.linspace(-5, 5, 41), np.linspace(-5, 5, 41)]
        grid = predictive_density_grid(trace, axes, data_n=5, beta=1.0)
        # n=5, K=1: weight (5+1)/(5+1) = 1, the grid is exactly the Gaussian
        pts = grid.points()
        want = np.exp(-0.5 * np.sum(pts**2, axis=1)) / (2 * math.pi)
        np.testing.assert_allclose(grid.values.ravel(), want, atol=1e-12)

    def test_riemann_sum_near_one(self):
        state = one_cluster_state([1.0, -1.0], [2.0, 0.5], 8)
        trace = trace_from_states([state])
        axes = [np.linspace(1 - 14, 1 + 14, 281), np.linspace(-1 - 7, -1 + 7, 141)]
        grid = predictive_density_grid(trace, axes, data_n=8)
        assert 0.98 <= grid.riemann_sum() <= 1.02

    def test_linear_in_trace_concatenation(self, rng):
        states_a = [one_cluster_state(rng.normal(size=2), [1.0, 1.0], 4) for _ in range(3)]
        states_b = [one_cluster_state(rng.normal(size=2), [2.0, 1.5], 4) for _ in range(5)]
        axes = [np.linspace(-4, 4, 17), np.linspace(-4, 4, 17)]
        ga = predictive_density_grid(trace_from_states(states_a), axes, data_n=4)
        gb = predictive_density_grid(trace_from_states(states_b), axes, data_n=4)
        gab = predictive_density_grid(trace_from_states(states_a + states_b), axes, data_n=4)
        want = (3 * ga.values + 5 * gb.values) / 8
        np.testing.assert_allclose(gab.values, want, atol=1e-12)

    def test_dimension_mismatch(self):
        state = one_cluster_state([0.0, 0.0], [1.0, 1.0], 5)
        trace = trace_from_states([state])
        with pytest.raises(DimensionError):
            predictive_density_grid(trace, [np.linspace(-1, 1, 5)], data_n=5)

    def test_grid_csv(self, tmp_path):
        state = one_cluster_state([0.0, 0.0], [1.0, 1.0], 5)
        grid = predictive_density_grid(
            trace_from_states([state]), [np.linspace(-1, 1, 3)] * 2, data_n=5
        )
        path = tmp_path / "grid.csv"
        write_grid_csv(grid, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "x1,x2,density"
        assert len(lines) == 10


class TestPosteriorK:
    def test_point_mass(self):
        states = [one_cluster_state([0.0], [1.0], 3) for _ in range(5)]
        freqs = posterior_k_distribution(trace_from_states(states))
        assert freqs == {1: 1.0}

    def test_sums_to_one(self):
        states = []
        for k in (1, 2, 2, 3):
            s = one_cluster_state([0.0], [1.0], 3)
            s.k = k
            s.empty_centers = np.arange(float(k - 1)).reshape(k - 1, 1) + 5.0
            s.empty_covs = np.ones((k - 1, 1))
            states.append(s)
        freqs = posterior_k_distribution(trace_from_states(states))
        assert sum(freqs.values()) == pytest.approx(1.0)
        assert freqs == {1: 0.25, 2: 0.5, 3: 0.25}


class TestCoclustering:
    def test_diagonal_is_one(self, rng):
        states = []
        for _ in range(4):
            lab = rng.integers(0, 3, size=6)
            lab[0] = 0
            part = Partition.from_labels(lab)
            ell = part.ell
            states.append(
                MixtureState(
                    part=part,
                    centers=rng.normal(size=(ell, 1)),
                    covs=np.ones((ell, 1)),
                    k=ell,
                    empty_centers=np.zeros((0, 1)),
                    empty_covs=np.zeros((0, 1)),
                )
            )
        summary = coclustering(trace_from_states(states))
        np.testing.assert_allclose(np.diag(summary.h_matrix), 1.0)
        np.testing.assert_allclose(summary.h_matrix, summary.h_matrix.T)
        assert np.all(summary.h_matrix >= 0.0) and np.all(summary.h_matrix <= 1.0)

    def test_perfect_recovery_zero_error(self):
        labels = np.array([0, 0, 1, 1, 2])
        part = Partition.from_labels(labels)
        state = MixtureState(
            part=part,
            centers=np.array([[0.0], [5.0], [10.0]]),
            covs=np.ones((3, 1)),
            k=3,
            empty_centers=np.zeros((0, 1)),
            empty_covs=np.zeros((0, 1)),
        )
        summary = coclustering(trace_from_states([state, state]), true_labels=labels)
        assert summary.misclassification == pytest.approx(0.0, abs=1e-15)

    def test_known_error_value(self):
        # two sweeps, second one misplaces observation 2
        right = Partition.from_labels([0, 0, 1, 1])
        wrong = Partition.from_labels([0, 0, 0, 1])

        def state_of(part):
            ell = part.ell
            return MixtureState(
                part=part,
                centers=np.arange(float(ell)).reshape(ell, 1),
                covs=np.ones((ell, 1)),
                k=ell,
                empty_centers=np.zeros((0, 1)),
                empty_covs=np.zeros((0, 1)),
            )

        labels = np.array([0, 0, 1, 1])
        summary = coclustering(
            trace_from_states([state_of(right), state_of(wrong)]), true_labels=labels
        )
        s = (labels[:, None] == labels[None, :]).astype(float)
        h = np.array(
            [
                [1.0, 1.0, 0.5, 0.0],
                [1.0, 1.0, 0.5, 0.0],
                [0.5, 0.5, 1.0, 0.5],
                [0.0, 0.0, 0.5, 1.0],
            ]
        )
        want = np.linalg.norm(h - s) / 16.0
        assert summary.misclassification == pytest.approx(want, rel=1e-12)


class TestShrinkageConstant:
    def test_one_at_zero(self):
        for r in (1, 2):
            assert shrinkage_constant(r, 0.0, 100, 5, 10.0, 2, 0.5, 0.5) == pytest.approx(1.0)

    def test_double_entry_evaluation(self):
        # independent re-implementation of the displayed formulas
        g0, n, n_tail, tau, p, e0, delta = 7.0, 1000, 6, 10.0, 2, 0.35, 0.4
        a = math.sqrt(2 * p * tau**2 + (2 * n / n_tail) * tau**4 * e0)
        want1 = (1 + g0**1.5 * delta) ** (2 / 3) * a / (g0 + a)
        want2 = (1 + math.sqrt(g0) * delta) * a / (g0 + a)
        assert shrinkage_constant(1, g0, n, n_tail, tau, p, e0, delta) == pytest.approx(want1, rel=1e-14)
        assert shrinkage_constant(2, g0, n, n_tail, tau, p, e0, delta) == pytest.approx(want2, rel=1e-14)

    @pytest.mark.parametrize("r,delta", [(1, 1e-6), (2, 0.3)])
    def test_decreasing_beyond_turning_point(self, r, delta):
        grid = np.geomspace(0.01, 10**5, 200)
        vals = np.array(
            [shrinkage_constant(r, g0, 200, 5, 10.0, 2, 0.2, delta) for g0 in grid]
        )
        peak = int(np.argmax(vals))
        tail = vals[peak:]
        assert np.all(np.diff(tail) <= 1e-12)
        assert tail[-1] < 1.0

    def test_bad_args(self):
        with pytest.raises(SupportError):
            shrinkage_constant(3, 1.0, 10, 5, 1.0, 2, 0.1, 0.1)
        with pytest.raises(SupportError):
            shrinkage_constant(1, 1.0, 10, 2, 1.0, 2, 0.1, 0.1)


class TestAutocorrelation:
    def test_lag_zero(self, rng):
        acf = autocorrelation(rng.normal(size=100), 5)
        assert acf[0] == 1.0

    def test_white_noise_bound(self):
        n = 10**4
        passes = 0
        seeds = range(30)
        for s in seeds:
            x = np.random.default_rng(s).normal(size=n)
            acf = autocorrelation(x, 20)
            if np.all(np.abs(acf[1:]) < 4.0 / math.sqrt(n)):
                passes += 1
        assert passes >= 28  # ~95% of seeds

    def test_ar1_oracle(self):
        rng = np.random.default_rng(8)
        n, phi = 10**4, 0.5
        x = np.empty(n)
        x[0] = rng.normal()
        for t in range(1, n):
            x[t] = phi * x[t - 1] + rng.normal()
        acf = autocorrelation(x, 3)
        assert abs(acf[1] - phi) < 0.05

    def test_constant_series(self):
        with pytest.warns(UserWarning):
            acf = autocorrelation(np.ones(50), 4)
        np.testing.assert_array_equal(acf, [1.0, 0.0, 0.0, 0.0, 0.0])

    def test_series_too_short(self):
        with pytest.raises(SupportError):
            autocorrelation(np.ones(5), 5)


class TestDensityGridType:
    def test_shape_checked(self):
        with pytest.raises(DimensionError):
            DensityGrid(axes=[np.arange(3.0)], values=np.zeros(4))

    def test_scenario_density_backstop(self):
        # the true trimodal density integrates to about 1 on a wide window
        axes = [np.linspace(-16, 16, 161)] * 2
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = scenario_density("trimodal", pts)
        step = axes[0][1] - axes[0][0]
        assert np.sum(vals) * step**2 == pytest.approx(1.0, abs=1e-3)

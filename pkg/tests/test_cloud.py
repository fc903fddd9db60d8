"""Branching-diffusion simulation: exact laws, martingales, genealogy."""

import math

import numpy as np
import pytest
from scipy import stats

from bouex.cloud import (ParticleCloud, additive_martingale,
                         additive_martingale_per_rep, derivative_martingale,
                         derivative_martingale_per_rep, extremal_measure,
                         simulate_cloud, simulate_forest, variable_speed_view)
from bouex.errors import ResourceLimitError
from bouex.gaussian import SQRT2, SpringParams, normalization_factor, ou_variance, \
    pair_covariance
from bouex.measure import Centering
from bouex.rng import substream


class TestSimulateCloud:
    def test_short_horizon_single_leaf(self):
        rng = substream(1, 0)
        branched = 0
        for _ in range(200):
            cloud = simulate_cloud(SpringParams(0.0, 1e-6), rng)
            branched += cloud.leaf_count > 1
        assert branched == 0

    def test_yule_mean(self):
        forest = simulate_forest(0.0, 3.0, 10_000, substream(2, 0))
        counts = forest.leaf_counts()
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - math.exp(3.0)) < 4.0 * se

    def test_uniform_leaf_marginal_ks(self):
        # one uniformly chosen leaf per replica is exactly OU-distributed
        forest = simulate_forest(1.0, 3.0, 10_000, substream(3, 0))
        rng = substream(3, 1)
        picks = np.empty(forest.n_reps)
        rep, x = forest.leaf_positions()
        counts = forest.leaf_counts()
        offsets = np.concatenate(([0], np.cumsum(counts)))
        order = np.argsort(rep, kind="stable")
        xs = x[order]
        for r in range(forest.n_reps):
            block = xs[offsets[r]:offsets[r + 1]]
            picks[r] = block[rng.integers(0, block.size)]
        sd = math.sqrt(ou_variance(1.0, 3.0))
        assert stats.kstest(picks / sd, "norm").pvalue > 0.01

    def test_branch_times_increase_along_paths(self):
        cloud = simulate_cloud(SpringParams(0.5, 4.0), substream(4, 0))
        f = cloud.forest
        has_parent = f.parent >= 0
        assert np.all(f.t_end[has_parent] > f.t_end[f.parent[has_parent]] - 1e-15)

    def test_horizon_cap(self):
        with pytest.raises(ResourceLimitError, match="e\\^t"):
            simulate_cloud(SpringParams(0.0, 17.0), substream(5, 0))

    def test_determinism(self):
        a = simulate_cloud(SpringParams(1.0, 3.0), substream(6, 3))
        b = simulate_cloud(SpringParams(1.0, 3.0), substream(6, 3))
        assert np.array_equal(a.leaf_positions, b.leaf_positions)


class TestManyToOne:
    """Exact first-moment identity over a function battery."""

    @pytest.mark.parametrize("mu,t", [(0.0, 3.0), (1.0, 3.0)])
    def test_battery(self, mu, t):
        n = 20_000
        forest = simulate_forest(mu, t, n, substream(7, 0))
        rep, x = forest.leaf_positions()
        v = ou_variance(mu, t)
        battery = [
            (lambda y: np.ones_like(y), math.exp(t)),
            (lambda y: np.exp(0.5 * y), math.exp(t) * math.exp(0.125 * v)),
            (lambda y: y * y, math.exp(t) * v),
            (lambda y: (y >= 1.0).astype(float),
             math.exp(t) * stats.norm.sf(1.0 / math.sqrt(v))),
        ]
        for f, target in battery:
            s = np.bincount(rep, weights=f(x), minlength=n)
            se = s.std(ddof=1) / math.sqrt(n)
            assert abs(s.mean() - target) < 4.0 * se + 1e-12


class TestExtremalMeasure:
    def test_single_leaf_shift(self):
        rng = substream(8, 0)
        while True:
            cloud = simulate_cloud(SpringParams(0.0, 1.0), rng)
            if cloud.leaf_count == 1:
                break
        m = extremal_measure(cloud, Centering("bou_onehalf", 1.0))
        assert m.atoms[0] == pytest.approx(cloud.leaf_positions[0] - SQRT2)

    def test_atom_count_equals_leaf_count(self):
        cloud = simulate_cloud(SpringParams(1.0, 4.0), substream(9, 0))
        m = extremal_measure(cloud, Centering("bou_tilde", 4.0))
        assert len(m) == cloud.leaf_count

    def test_centering_equivariance(self):
        cloud = simulate_cloud(SpringParams(1.0, 4.0), substream(10, 0))
        m1 = extremal_measure(cloud, Centering("bou_onehalf", 4.0))
        m2 = extremal_measure(cloud, Centering("bou_tilde", 4.0))
        shift = Centering("bou_onehalf", 4.0).value - Centering("bou_tilde", 4.0).value
        assert np.allclose(m2.atoms, m1.atoms + shift)

    def test_mismatched_horizon(self):
        cloud = simulate_cloud(SpringParams(1.0, 4.0), substream(11, 0))
        with pytest.raises(ValueError):
            extremal_measure(cloud, Centering("bou_tilde", 3.0))


class TestMartingales:
    def test_beta_zero_is_yule_martingale(self):
        forest = simulate_forest(0.0, 3.0, 20_000, substream(12, 0))
        w = additive_martingale_per_rep(forest, 0.0)
        counts = forest.leaf_counts()
        assert np.allclose(w, math.exp(-3.0) * counts)
        se = w.std(ddof=1) / math.sqrt(w.size)
        assert abs(w.mean() - 1.0) < 4.0 * se

    def test_additive_mean_one(self):
        forest = simulate_forest(0.0, 5.0, 10_000, substream(13, 0))
        w = additive_martingale_per_rep(forest, 0.5)
        se = w.std(ddof=1) / math.sqrt(w.size)
        assert abs(w.mean() - 1.0) < 4.0 * se

    def test_critical_beta_degenerates(self):
        w5 = np.concatenate([additive_martingale_per_rep(
            simulate_forest(0.0, 5.0, 50, substream(14, j)), SQRT2) for j in range(4)])
        w10 = np.concatenate([additive_martingale_per_rep(
            simulate_forest(0.0, 10.0, 25, substream(15, j)), SQRT2) for j in range(8)])
        assert np.median(w10) < 0.5 * np.median(w5)

    def test_requires_brownian_cloud(self):
        cloud = simulate_cloud(SpringParams(1.0, 2.0), substream(15, 0))
        with pytest.raises(ValueError):
            additive_martingale(cloud, 0.5)
        with pytest.raises(ValueError):
            derivative_martingale(cloud)

    def test_derivative_short_horizon(self):
        rng = substream(16, 0)
        while True:
            cloud = simulate_cloud(SpringParams(0.0, 1e-4), rng)
            if cloud.leaf_count == 1:
                break
        val = derivative_martingale(cloud)
        assert abs(val - SQRT2 * 1e-4 * math.exp(-2e-4)) < 0.01

    def test_derivative_mean_zero(self):
        forest = simulate_forest(0.0, 4.0, 100_000, substream(17, 0))
        z = derivative_martingale_per_rep(forest)
        se = z.std(ddof=1) / math.sqrt(z.size)
        assert abs(z.mean()) < 4.0 * se

    def test_derivative_mostly_positive_late(self):
        z = np.concatenate([derivative_martingale_per_rep(
            simulate_forest(0.0, 9.0, 50, substream(18, j))) for j in range(6)])
        assert np.mean(z < 0) < 0.05


class TestSiblingCovariance:
    def test_matches_pair_covariance_at_mrca(self):
        mu, t = 1.0, 2.0
        lam = normalization_factor(mu, t)
        rng = substream(19, 0)
        resid = []
        for _ in range(4000):
            cloud = simulate_cloud(SpringParams(mu, t), rng)
            if cloud.leaf_count < 2:
                continue
            u, v = rng.choice(cloud.leaf_count, size=2, replace=False)
            tau = cloud.mrca_time(int(u), int(v))
            x = cloud.leaf_positions
            resid.append(lam * x[u] * lam * x[v] - pair_covariance(mu, t, tau))
        resid = np.array(resid)
        se = resid.std(ddof=1) / math.sqrt(resid.size)
        assert abs(resid.mean()) < 4.0 * se


class TestVariableSpeedView:
    def test_boundary_times(self):
        gamma, t = 1.0, 4.0
        cloud = simulate_cloud(SpringParams(gamma / t, t), substream(20, 0))
        y0 = variable_speed_view(cloud, gamma, 0.0, substream(20, 1))
        assert np.allclose(y0, 0.0)
        yt = variable_speed_view(cloud, gamma, t, substream(20, 2))
        lam = normalization_factor(gamma / t, t)
        assert np.allclose(np.sort(yt), np.sort(lam * cloud.leaf_positions))

    def test_requires_matching_gamma(self):
        cloud = simulate_cloud(SpringParams(0.5, 4.0), substream(21, 0))
        with pytest.raises(ValueError):
            variable_speed_view(cloud, 1.0, 2.0, substream(21, 1))

    def test_profile_variance(self):
        gamma, t, s = 1.0, 6.0, 3.0
        rng = substream(22, 0)
        brng = substream(22, 1)
        vals = []
        for _ in range(2500):
            cloud = simulate_cloud(SpringParams(gamma / t, t), rng)
            y = variable_speed_view(cloud, gamma, s, brng)
            vals.append(y[0])
        vals = np.array(vals)
        target = t * math.expm1(2 * gamma * s / t) / math.expm1(2 * gamma)
        se = vals.var() * math.sqrt(2.0 / vals.size)
        assert abs(vals.var(ddof=1) - target) < 4.0 * se

"""Verification harness mechanics and the check battery at reduced scale."""

import json
import math

import numpy as np
import pytest

from bouex.checks import (CheckReport, TestFunction, check_first_moment,
                          check_iid_limit, check_many_to_one, check_many_to_two,
                          check_max_limit_law, check_second_moment_gap,
                          check_slepian_monotonicity, check_spine_identity,
                          check_yule_counts, check_limit_process_law,
                          exponential_window, gaussian_expectation,
                          iid_finite_t_functional, iid_limit_functional,
                          indicator, laplace_functional, pair_expectation,
                          reports_to_json, simulate_iid_laplace, smooth_step,
                          spine_identity_sides)
from bouex.gaussian import SQRT2
from bouex.measure import PointMeasure
from bouex import suite


class TestTestFunctions:
    def test_smooth_step_shape(self):
        phi = smooth_step(-1.0, 0.5, height=2.0)
        x = np.linspace(-2.0, 1.0, 301)
        v = phi(x)
        assert np.all(v[x <= -1.0] == 0.0)
        assert np.all(v[x >= -0.5] == 2.0)
        assert np.all(np.diff(v) >= -1e-12)

    def test_indicator_and_window(self):
        assert indicator(0.5)(np.array([0.4, 0.5, 0.6])).tolist() == [0.0, 1.0, 1.0]
        w = exponential_window(1.0, 0.0)
        assert w(np.array([-0.1, 0.0, 1.0])).tolist() == [0.0, 1.0, math.e]

    def test_laplace_functional_values(self):
        assert laplace_functional(PointMeasure(), smooth_step(0.0, 1.0)) == 1.0
        assert laplace_functional(PointMeasure([-5.0]), smooth_step(0.0, 1.0)) == 1.0
        phi = smooth_step(-1.0, 0.5)
        assert laplace_functional(PointMeasure([0.0]), phi) == pytest.approx(
            math.exp(-1.0))


class TestOracles:
    def test_gaussian_expectation_closed_forms(self):
        # indicator and exponential-window quadrature vs closed forms
        from scipy.stats import norm
        v = 1.7
        assert gaussian_expectation(indicator(0.8), v, 0.8) == pytest.approx(
            norm.sf(0.8 / math.sqrt(v)), rel=1e-8)
        beta, a = 0.6, 0.3
        target = math.exp(0.5 * beta * beta * v - beta * a) * \
            norm.sf((a - beta * v) / math.sqrt(v))
        assert gaussian_expectation(exponential_window(beta, a), v, a) == \
            pytest.approx(target, rel=1e-8)

    def test_pair_expectation_independent_factorizes(self):
        f = indicator(0.5)
        v = 1.3
        single = gaussian_expectation(f, v, 0.5)
        assert pair_expectation(f, v, 0.0) == pytest.approx(single * single, rel=1e-6)

    def test_pair_expectation_full_correlation(self):
        f = indicator(0.5)
        v = 1.3
        assert pair_expectation(f, v, v * (1 - 1e-12)) == pytest.approx(
            gaussian_expectation(f, v, 0.5), rel=1e-5)

    def test_pair_expectation_smooth_step_consistency(self):
        # Monte Carlo cross-check of the 2-d quadrature
        f = smooth_step(0.0, 1.0)
        v, c = 1.0, 0.6
        rng = np.random.default_rng(7)
        z1 = rng.standard_normal(200_000)
        z2 = c * z1 + math.sqrt(v - c * c / v * v) * rng.standard_normal(200_000)
        emp = (f(z1 * math.sqrt(v) / math.sqrt(v)) * f(z2)).mean()
        val = pair_expectation(f, v, c)
        se = (f(z1) * f(z2)).std() / math.sqrt(z1.size)
        assert abs(val - emp) < 5 * se + 0.003

    def test_iid_limit_formula_at_zero(self):
        # the limiting CDF of the maximum at z=0 is exactly 1/2 under the
        # tilde centring; in these (m_t) coordinates the plateau-inf step at 0
        # gives (1 + 1/sqrt(4 pi) * ... ) -- sanity: monotone in the height
        lo = iid_limit_functional(smooth_step(0.0, 1.0, height=1.0))
        hi = iid_limit_functional(smooth_step(0.0, 1.0, height=20.0))
        assert 0.0 < hi < lo < 1.0

    def test_finite_t_approaches_limit(self):
        phi = smooth_step(0.0, 1.0, height=20.0)
        d10 = abs(iid_finite_t_functional(phi, 10.0) - iid_limit_functional(phi))
        d14 = abs(iid_finite_t_functional(phi, 14.0) - iid_limit_functional(phi))
        assert d14 < d10 < 0.08
        assert d14 < 0.05


class TestReports:
    def test_pass_iff_statistic_below_threshold(self):
        r = CheckReport.make("x", 1.0, 2.0, 10)
        assert r.passed and not r.failed
        r = CheckReport.make("x", 3.0, 2.0, 10)
        assert not r.passed and r.failed

    def test_inconclusive_is_not_failed(self):
        r = CheckReport.make("x", math.inf, 2.0, 10, inconclusive=True)
        assert not r.passed and not r.failed

    def test_json_round_trip(self):
        r = CheckReport.make("x", 1.0, 2.0, 10, extra_field=[1, 2])
        data = json.loads(reports_to_json([r]))
        assert data[0]["name"] == "x"
        assert data[0]["details"]["extra_field"] == [1, 2]


class TestChecksReduced:
    """Every check at a scale that runs in seconds."""

    def test_many_to_one(self):
        r = check_many_to_one(1.0, 3.0, indicator(1.0), 20_000, seed=80)
        assert r.passed

    def test_many_to_one_brownian_exponential(self):
        r = check_many_to_one(0.0, 3.0, exponential_window(0.5, 0.0), 20_000, seed=81)
        assert r.passed

    def test_many_to_two_yule_closed_form(self):
        # f == 1 (indicator at -inf): target reduces to 2 e^{2t} - e^t exactly
        t = 1.5
        r = check_many_to_two(1.0, t, indicator(-math.inf), 20_000, seed=82)
        assert r.passed
        assert r.details["target"] == pytest.approx(
            2 * math.exp(2 * t) - math.exp(t), rel=1e-6)

    def test_many_to_two_exponential(self):
        r = check_many_to_two(1.0, 1.5, exponential_window(0.5, 0.0), 20_000, seed=83)
        assert r.passed

    def test_many_to_two_decorrelation_large_mu(self):
        # strong spring: the pair term approaches the product of singles
        from bouex.checks import pair_expectation
        from bouex.gaussian import ou_variance
        f = indicator(0.5)
        t = 1.5
        for mu, tol in [(50.0, 0.02)]:
            v = ou_variance(mu, t)
            c = math.exp(-2 * mu * (t - 0.5)) * ou_variance(mu, 0.5)
            single = gaussian_expectation(f, v, 0.5)
            assert pair_expectation(f, v, c) == pytest.approx(single ** 2, rel=tol)

    def test_spine_identity_weight_positivity(self):
        # importance weights lie in (0, 1] on the conditioning event
        from bouex.spine import _draw_branches
        from bouex.rng import substream
        _, _, _, b_T = _draw_branches(5000, 1.0, substream(84, 0))
        w = np.where(b_T <= 0, np.exp(SQRT2 * 1.5 * b_T), np.nan)
        w = w[~np.isnan(w)]
        assert np.all((w > 0) & (w <= 1.0))

    def test_spine_identity_passes(self):
        r = check_spine_identity(1.0, 1.0, 60_000, seed=85)
        assert r.passed

    def test_spine_identity_mutation_detected(self):
        r = check_spine_identity(1.5, 1.5, 60_000, seed=86, drift_sign=+1.0)
        assert not r.passed

    def test_max_limit_law(self):
        r = check_max_limit_law(1.0, 8.0, 2000, seed=87, threshold=0.08)
        assert r.passed
        assert abs(r.details["median"]) < 0.3

    def test_max_limit_law_cdf_value(self):
        # limiting CDF at 0 is exactly 1/2
        from scipy.special import expit
        assert expit(SQRT2 * 0.0) == 0.5

    def test_first_moment(self):
        # at t=8 the finite-horizon deficit at z=-1 already exceeds the 0.2
        # band (it re-enters by t=12), so the reduced grid stays at z >= 0
        r = check_first_moment(1.0, 8.0, (0.0, 1.0, 2.0), 4000, seed=88)
        assert r.passed

    def test_first_moment_validates_levels(self):
        with pytest.raises(ValueError):
            check_first_moment(1.0, 8.0, (5.0,), 100, seed=89)

    def test_second_moment_gap(self):
        r = check_second_moment_gap(1.0, 8.0, (0.5, 1.0, 1.5, 2.0, 2.5),
                                    30_000, seed=90)
        assert r.passed or r.inconclusive
        if r.passed:
            gaps = [g for g in r.details["gaps"] if g > 0]
            assert gaps[0] > gaps[-1]

    def test_second_moment_gap_inconclusive_path(self):
        r = check_second_moment_gap(1.0, 4.0, (1.4, 1.6, 1.8), 50, seed=91)
        assert r.inconclusive or r.passed

    def test_slepian(self):
        r = check_slepian_monotonicity([0.1, 1.0, 10.0, math.inf],
                                       smooth_step(0.0, 1.0), 5.0, 1500, seed=92)
        assert r.passed
        assert len(r.details["laplace"]) == 4

    def test_slepian_single_point_trivial(self):
        r = check_slepian_monotonicity([0.5], smooth_step(0.0, 1.0), 4.0, 200,
                                       seed=93)
        assert r.passed

    def test_slepian_constant_phi_equal(self):
        # a flat test function only sees the leaf count, equal across mu
        r = check_slepian_monotonicity([0.5, 5.0], smooth_step(-30.0, 1e-6), 4.0,
                                       2000, seed=94)
        assert abs(r.details["laplace"][0] - r.details["laplace"][1]) < 1e-12

    def test_iid_limit(self):
        r = check_iid_limit(12.0, 20_000, seed=95, tol=0.06)
        assert r.passed
        for row in r.details["rows"]:
            assert row["z_vs_exact"] < 4.5

    def test_iid_simulator_matches_brute_force(self):
        # exact-law shortcut vs full mu = inf forests at small t
        from bouex.cloud import simulate_forest
        from bouex.measure import Centering
        from bouex.rng import substream
        phi = smooth_step(0.0, 1.0, height=2.0)
        t, n = 6.0, 4000
        mean_fast, se_fast = simulate_iid_laplace(phi, t, n, seed=96)
        m_t = Centering("bou_onehalf", t).value
        vals = []
        for j in range((n + 255) // 256):
            m = min(256, n - 256 * j)
            forest = simulate_forest(1.0, t, m, substream(97, j))
            leaves = forest.positions_for(math.inf)
            rep = forest.rep[forest.is_leaf]
            tot = np.bincount(rep, weights=phi(leaves - m_t), minlength=m)
            vals.append(np.exp(-tot))
        vals = np.concatenate(vals)
        se = math.hypot(se_fast, vals.std(ddof=1) / math.sqrt(n))
        assert abs(mean_fast - vals.mean()) < 4.0 * se

    def test_yule_counts(self):
        r = check_yule_counts(4.0, 3000, seed=98)
        assert r.passed

    def test_limit_process_law(self):
        r = check_limit_process_law(5000, seed=99)
        assert r.passed


class TestSuite:
    def test_smoke_suite_runs_and_reports_all(self):
        reports = suite.run_suite("smoke", seed=123)
        names = {r.name for r in reports}
        assert names == set(suite.suite_names("smoke"))
        failed = [r.name for r in reports if r.failed]
        assert failed == []

    def test_threshold_scaling_meta(self):
        # doubling n must not flip a robust pass (statistical thresholds
        # scale as 1/sqrt(n) through the stderr)
        for seed in (201, 202):
            a = check_many_to_one(1.0, 3.0, indicator(1.0), 10_000, seed=seed)
            b = check_many_to_one(1.0, 3.0, indicator(1.0), 20_000, seed=seed)
            assert a.passed and b.passed

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            suite.run_suite("nope", seed=1)

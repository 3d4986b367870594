"""Tests for statistics, theoretical sampling moments, max-entropy
construction, MAP fitting, and gauge canonicalization."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from grassbin import (
    Dataset,
    FitConfig,
    InfeasibleTargetError,
    MomentTarget,
    NonPositiveProbabilityError,
    TooFewSamplesError,
    canonicalize_gauge,
    fit_map,
    fit_max_entropy,
    from_sigma,
    log_posterior,
    sample,
    seeded_rng,
    summarize,
    theoretical_stat_moments,
)
from grassbin import linalg
from grassbin.experiments import (
    REFERENCE_MEANS,
    REFERENCE_PEARSON,
    reference_model,
    reference_target,
)

from helpers import random_valid_model, random_valid_sigma


class TestSummarize:
    def test_identical_rows_zero_covariance(self):
        data = Dataset(np.tile([1, 0, 1], (6, 1)).astype(np.uint8))
        s = summarize(data)
        assert_allclose(s.covariances, 0.0, atol=1e-15)
        assert_allclose(s.means, [1.0, 0.0, 1.0])

    def test_two_row_hand_value(self):
        data = Dataset(np.array([[1, 0], [0, 1]], dtype=np.uint8))
        s = summarize(data)
        assert_allclose(s.means, [0.5, 0.5])
        assert_allclose(s.covariances[0, 1], -0.5)
        assert_allclose(s.covariances[0, 0], 0.5)  # unbiased variance

    def test_q_sums_to_one(self):
        rng = np.random.default_rng(0)
        data = Dataset(rng.integers(0, 2, size=(37, 3)).astype(np.uint8))
        s = summarize(data)
        assert_allclose(sum(s.empirical_joint.values()), 1.0, atol=1e-12)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamplesError):
            summarize(Dataset(np.zeros((1, 2), dtype=np.uint8)))


class TestTheoreticalMoments:
    def test_var_xbar_hand_value(self):
        m = from_sigma([[0.7]])
        sm = theoretical_stat_moments(m, 500)
        assert_allclose(sm.var_xbar[0], 0.00042, atol=1e-18)

    def test_independent_reduction(self):
        m = from_sigma(np.diag([0.3, 0.6]))
        n = 100
        sm = theoretical_stat_moments(m, n)
        mii, mjj = 0.3 * 0.7, 0.6 * 0.4
        want = mii * mjj / n + mii * mjj / (n * (n - 1))
        assert_allclose(sm.var_cov[0, 1], want, rtol=1e-12)
        assert_allclose(sm.mean_cov[0, 1], 0.0, atol=1e-15)

    def test_q_moments_match_table(self):
        rng = np.random.default_rng(1)
        m = random_valid_model(rng, 4)
        sm = theoretical_stat_moments(m, 50)
        table = m.joint_table()
        assert_allclose(sm.mean_q, table, atol=1e-14)
        assert_allclose(sm.var_q, table * (1 - table) / 50, atol=1e-14)

    def test_matches_monte_carlo(self):
        # seed-averaged check of E/Var[xbar], E/Var[s_ij] on the reference model
        m = reference_model()
        n, trials = 200, 3000
        xbar5 = np.empty(trials)
        s13 = np.empty(trials)
        for t in range(trials):
            data = sample(m, n, seeded_rng(50_000 + t))
            x = data.rows.astype(float)
            xbar5[t] = x[:, 4].mean()
            s13[t] = (x[:, 0] - x[:, 0].mean()) @ (x[:, 2] - x[:, 2].mean()) / (n - 1)
        sm = theoretical_stat_moments(m, n)
        mc_se = np.sqrt(sm.var_xbar[4] / trials)
        assert abs(xbar5.mean() - sm.mean_xbar[4]) < 3 * mc_se
        assert abs(xbar5.var(ddof=1) / sm.var_xbar[4] - 1) < 0.1
        mc_se = np.sqrt(sm.var_cov[0, 2] / trials)
        assert abs(s13.mean() - sm.mean_cov[0, 2]) < 3 * mc_se
        assert abs(s13.var(ddof=1) / sm.var_cov[0, 2] - 1) < 0.1


class TestMaxEntropy:
    def test_p2_unique_and_exact(self):
        target = MomentTarget.from_pearson([0.6, 0.3],
                                           np.array([[0.0, -0.2], [-0.2, 0.0]]))
        m = fit_max_entropy(target)
        assert_allclose(m.mean(1), 0.6, atol=1e-12)
        assert_allclose(m.mean(2), 0.3, atol=1e-12)
        assert_allclose(m.pearson(1, 2), -0.2, atol=1e-12)
        # gauge pinned: the only freedom is none
        assert_allclose(m.sigma[1, 0], -1.0)

    def test_diagonal_target(self):
        mus = [0.2, 0.5, 0.7]
        target = MomentTarget.from_pearson(mus, np.zeros((3, 3)))
        m = fit_max_entropy(target)
        want = sum(-(u * np.log(u) + (1 - u) * np.log(1 - u)) for u in mus)
        assert_allclose(m.entropy(), want, atol=1e-9)
        off = ~np.eye(3, dtype=bool)
        assert_allclose((m.sigma * m.sigma.T)[off], 0.0, atol=1e-15)

    def test_reference_targets_match(self):
        m = reference_model()
        assert m.validity.status == "valid"
        for i, mu in enumerate(REFERENCE_MEANS, start=1):
            assert abs(m.mean(i) - mu) < 1e-6
        for (i, j), rho in REFERENCE_PEARSON.items():
            assert abs(m.pearson(i, j) - rho) < 1e-6
        assert_allclose(m.pearson(1, 3), 0.32, atol=1e-9)

    def test_reference_model_lambda_is_p0(self):
        m = reference_model()
        ok, _ = linalg.is_p0_matrix(m.lam - np.eye(5))
        assert ok

    def test_entropy_beats_random_feasible_splits(self):
        m = reference_model()
        best = m.entropy()
        target = reference_target()
        rng = np.random.default_rng(2)
        from grassbin.estimation import _assemble_sigma, _free_pairs, _min_prob
        n_free = len(_free_pairs(5))
        found = 0
        attempts = 0
        while found < 20 and attempts < 4000:
            attempts += 1
            ratios = rng.uniform(-1.5, 1.5, n_free)
            signs = rng.choice([-1.0, 1.0], n_free)
            sigma = _assemble_sigma(target, ratios, signs)
            if _min_prob(sigma) <= 0:
                continue
            found += 1
            assert from_sigma(sigma).entropy() <= best + 1e-9
        assert found == 20

    def test_infeasible_target(self):
        # perfect correlations on conflicting pairs cannot be realized
        rho = np.array([[0.0, 0.99, -0.99],
                        [0.99, 0.0, 0.99],
                        [-0.99, 0.99, 0.0]])
        target = MomentTarget.from_pearson([0.5, 0.5, 0.5], rho)
        with pytest.raises(InfeasibleTargetError):
            fit_max_entropy(target)

    def test_target_validation(self):
        with pytest.raises(ValueError):
            MomentTarget.from_pearson([0.5, 1.5], np.zeros((2, 2)))
        with pytest.raises(ValueError):
            MomentTarget(np.array([0.5, 0.5]),
                         np.array([[0.25, 0.3], [0.3, 0.25]]))  # rho > 1


class TestLogPosterior:
    def test_p1_maximum_at_pseudo_count_mean(self):
        counts = np.array([3.0, 7.0])
        gamma = 0.01
        best = (7 + gamma) / (10 + 2 * gamma)
        val_best = log_posterior(np.array([[best]]), counts, gamma)
        for mu in (best - 0.01, best + 0.01, 0.5, 0.9):
            assert log_posterior(np.array([[mu]]), counts, gamma) < val_best

    def test_gamma_zero_is_scaled_cross_entropy(self):
        rng = np.random.default_rng(3)
        sigma = random_valid_sigma(rng, 3)
        m = from_sigma(sigma)
        counts = np.arange(8.0) + 1
        n = counts.sum()
        q = counts / n
        table = m.joint_table()
        want = n * float(q @ np.log(table))
        assert_allclose(log_posterior(sigma, counts, 1e-300), want, rtol=1e-9)

    def test_gauge_invariance(self):
        rng = np.random.default_rng(4)
        sigma = random_valid_sigma(rng, 4)
        counts = rng.integers(0, 20, 16).astype(float)
        base = log_posterior(sigma, counts, 0.01)
        scaled = sigma.copy()
        scaled[2, :] *= -3.0
        scaled[:, 2] /= -3.0
        assert_allclose(log_posterior(scaled, counts, 0.01), base, rtol=1e-10)
        assert_allclose(log_posterior(sigma.T.copy(), counts, 0.01), base, rtol=1e-10)
        assert_allclose(log_posterior(canonicalize_gauge(sigma), counts, 0.01),
                        base, rtol=1e-10)

    def test_nonpositive_probability(self):
        sigma = np.array([[0.5, 0.9], [0.9, 0.5]])
        with pytest.raises(NonPositiveProbabilityError) as err:
            log_posterior(sigma, np.ones(4), 0.01)
        assert err.value.state >= 0

    def test_accepts_dataset_and_dict(self):
        data = Dataset(np.array([[1, 0], [0, 1], [1, 1]], dtype=np.uint8))
        sigma = np.array([[0.5, 0.2], [-0.2, 0.5]])
        a = log_posterior(sigma, data, 0.01)
        b = log_posterior(sigma, data.counts, 0.01)
        c = log_posterior(sigma, data.count_vector(), 0.01)
        assert_allclose([a, b], c)


class TestFitMap:
    def test_p1_closed_form(self):
        rows = np.array([[1]] * 7 + [[0]] * 3, dtype=np.uint8)
        report = fit_map(Dataset(rows), FitConfig(gamma=0.01))
        assert report.converged
        assert_allclose(report.sigma[0, 0], 7.01 / 10.02, atol=1e-8)

    def test_trace_is_monotone(self):
        # non-decreasing up to the ulp-scale line-search slack
        m = reference_model()
        data = sample(m, 300, seeded_rng(5))
        report = fit_map(data)
        trace = np.array(report.log_posterior_trace)
        slack = 64 * np.finfo(float).eps * np.abs(trace).max()
        assert np.all(np.diff(trace) >= -slack)
        assert trace[-1] > trace[0]

    def test_gauge_is_canonical(self):
        m = reference_model()
        data = sample(m, 200, seeded_rng(6))
        report = fit_map(data)
        assert_allclose(report.sigma[1:, 0], -1.0)

    def test_independent_data_recovers_small_covariances(self):
        mus = np.array([0.3, 0.6, 0.8])
        m = from_sigma(np.diag(mus))
        n = 5000
        data = sample(m, n, seeded_rng(7))
        report = fit_map(data)
        est = report.model(check="none")
        sm = theoretical_stat_moments(m, n)
        for i in range(1, 4):
            for j in range(i + 1, 4):
                bound = 4 * np.sqrt(sm.var_cov[i - 1, j - 1])
                assert abs(est.covariance(i, j)) < bound

    def test_map_dominates_truth_on_training_objective(self):
        # with a vanishing prior, the fit cannot lose to the truth in
        # empirical KL(q || pi)
        m = reference_model()
        data = sample(m, 10_000, seeded_rng(8))
        gamma = 1e-9
        report = fit_map(data, FitConfig(gamma=gamma))
        counts = data.count_vector()
        q = counts / counts.sum()
        table_hat = report.model(check="none").joint_table()
        table_true = m.joint_table()
        support = q > 0
        kl_hat = float((q[support] * np.log(q[support] / table_hat[support])).sum())
        kl_true = float((q[support] * np.log(q[support] / table_true[support])).sum())
        assert kl_hat < kl_true + 1e-9

    def test_rmse_shrinks_with_sample_size(self):
        m = reference_model()
        seeds = 50
        rmse = {}
        for n in (50, 200, 2000):
            errs = []
            for s in range(seeds):
                data = sample(m, n, seeded_rng(9000 + s))
                report = fit_map(data)
                est = report.model(check="none")
                errs.extend(est.mean(i) - m.mean(i) for i in range(1, 6))
            rmse[n] = float(np.sqrt(np.mean(np.square(errs))))
        assert rmse[2000] < rmse[200] < rmse[50]

    def test_zero_iterations_not_converged(self):
        # asymmetric data: the moment-matching start is not the MAP optimum
        rows = [[1, 1]] * 5 + [[1, 0]] * 2 + [[0, 0]] * 3
        data = Dataset(np.array(rows, dtype=np.uint8))
        report = fit_map(data, FitConfig(max_newton_iters=0))
        assert not report.converged
        assert report.iterations == 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FitConfig(gamma=0.0)
        with pytest.raises(ValueError):
            FitConfig(gradient_tolerance=-1.0)


class TestCanonicalizeGauge:
    def test_already_canonical_unchanged(self):
        m = reference_model()
        assert_allclose(canonicalize_gauge(m.sigma), m.sigma, atol=1e-14)

    def test_scaling_round_trip(self):
        m = reference_model()
        scaled = np.array(m.sigma)
        scaled[2, :] *= 2.0
        scaled[:, 2] *= 0.5
        assert_allclose(canonicalize_gauge(scaled), m.sigma, atol=1e-12)

    def test_preserves_joint_table(self):
        rng = np.random.default_rng(10)
        for _ in range(15):
            p = int(rng.integers(2, 7))
            sigma = random_valid_sigma(rng, p)
            if np.any(np.abs(sigma[1:, 0]) < 1e-6):
                continue
            canon = canonicalize_gauge(sigma)
            assert_allclose(canon[1:, 0], -1.0)
            assert_allclose(from_sigma(canon).joint_table(),
                            from_sigma(sigma).joint_table(), atol=1e-10)

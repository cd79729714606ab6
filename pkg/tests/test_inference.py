import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy import stats as sps

from schauderdrift.experiments import STANDARD_TRUTH, MCMCConfig, make_truth, standard_test_path
from schauderdrift.fsbasis import Expansion, design_matrix, norm, levels
from schauderdrift.inference import (
    ChainState,
    MarginalPosterior,
    SpectralMarginal,
    StatsAccumulator,
    SufficientStats,
    acceptance_rates,
    conditional_posterior,
    credible_band,
    draws_on_grid,
    log_marginal,
    mcmc_run,
    posterior_mean_drift,
    regression_stats,
    simulate_stats,
    sufficient_stats,
)
from schauderdrift.prior import OU, CovMatrix, Independent, PriorSpec, covariance_matrix
from schauderdrift.sdesim import ObservedPath, simulate_path
from schauderdrift.verify import disjoint_mask


def _stats(mu, gram, r, T=1.0):
    return SufficientStats(r, np.asarray(mu, float), sp.csr_matrix(np.asarray(gram, float)), T)


@pytest.fixture(scope="module")
def short_path():
    return simulate_path(make_truth(1.0, 1.0, 5, 1), 0.1, 3.0, 1e-3, np.random.default_rng(31))


class TestSufficientStats:
    def test_constant_path(self):
        path = ObservedPath(1e-3, np.full(1001, 0.25), 0.25, 1.0)
        st = sufficient_stats(path, 3)
        psi = design_matrix(3, 0.25)[0]
        assert np.all(st.mu == 0)
        np.testing.assert_allclose(st.dense_gram(), np.outer(psi, psi), atol=1e-12)

    def test_dense_oracle(self, short_path):
        r = 4
        st = sufficient_stats(short_path, r)
        Psi = design_matrix(r, short_path.values[:-1])
        np.testing.assert_allclose(st.mu, Psi.T @ short_path.increments, atol=1e-12)
        np.testing.assert_allclose(st.dense_gram(), Psi.T @ Psi * short_path.dt, atol=1e-12)

    def test_structural_zeros_not_stored(self, short_path):
        st = sufficient_stats(short_path, 4)
        coo = st.gram.tocoo()
        mask = disjoint_mask(4)
        assert not np.any(mask[coo.row, coo.col])
        assert st.dense_gram()[2, 3] == 0.0
        # every overlapping pair is stored
        assert st.gram.nnz == np.count_nonzero(~mask)

    def test_nested_exactly(self, short_path):
        big = sufficient_stats(short_path, 6)
        for r in range(6):
            small = sufficient_stats(short_path, r)
            n = 2 ** (r + 1)
            np.testing.assert_array_equal(small.mu, big.mu[:n])
            np.testing.assert_array_equal(small.dense_gram(), big.dense_gram()[:n, :n])
            np.testing.assert_array_equal(big.restrict(r).dense_gram(), small.dense_gram())

    def test_psd(self, short_path):
        g = sufficient_stats(short_path, 5).dense_gram()
        assert np.linalg.eigvalsh(g).min() > -1e-12

    def test_merge_segments(self, short_path):
        x, dx = short_path.values[:-1], short_path.increments
        whole = StatsAccumulator(3)
        whole.add(x, dx)
        parts = [StatsAccumulator(3) for _ in range(3)]
        for acc, sl in zip(parts, np.array_split(np.arange(x.size), 3)):
            acc.add(x[sl], dx[sl])
        parts[0].merge(parts[1])
        parts[0].merge(parts[2])
        np.testing.assert_allclose(parts[0].mu, whole.mu, atol=1e-12)
        np.testing.assert_allclose(parts[0].g, whole.g, atol=1e-12)
        assert parts[0].count == whole.count

    def test_streaming_equals_stored_path(self):
        b = make_truth(1.0, 1.0, 5, 2)
        path = simulate_path(b, 0.0, 4.0, 1e-3, np.random.default_rng(3))
        a = sufficient_stats(path, 5)
        s = simulate_stats(b, 0.0, 4.0, 1e-3, np.random.default_rng(3), 5)
        np.testing.assert_array_equal(a.mu, s.mu)
        np.testing.assert_array_equal(a.dense_gram(), s.dense_gram())

    def test_regression_stats(self, rng):
        x = rng.uniform(0, 1, 50)
        y = rng.standard_normal(50)
        st = regression_stats(x, y, 0.5, 3)
        Psi = design_matrix(3, x)
        np.testing.assert_allclose(st.mu, Psi.T @ y / 0.25, atol=1e-12)
        np.testing.assert_allclose(st.dense_gram(), Psi.T @ Psi / 0.25, atol=1e-12)
        with pytest.raises(ValueError):
            regression_stats([], [], 1.0, 2)


class TestConditionalPosterior:
    def test_no_data_gives_prior(self):
        A = covariance_matrix(2, PriorSpec(OU(1.0, 1.0)))
        post = conditional_posterior(_stats(np.zeros(8), np.zeros((8, 8)), 2), 1.3, A)
        assert np.all(post.mean == 0)
        np.testing.assert_allclose(post.covariance(), A.entries, atol=1e-12)

    def test_scalar_conjugacy(self):
        g = 2.5
        mu = np.array([1.0, -2.0, 0.5, 3.0])
        A = CovMatrix(1, np.eye(4))
        post = conditional_posterior(_stats(mu, g * np.eye(4), 1), 1.0, A)
        np.testing.assert_allclose(post.mean, mu / (g + 1), atol=1e-14)

    def test_scale_enters_squared(self, short_path):
        st = sufficient_stats(short_path, 2)
        A = covariance_matrix(2, PriorSpec())
        s = 1.7
        post = conditional_posterior(st, s, A)
        W = s * s * st.dense_gram() + np.linalg.inv(A.entries)
        np.testing.assert_allclose(post.precision, W, atol=1e-12)
        np.testing.assert_allclose(post.mean, np.linalg.solve(W, s * st.mu), atol=1e-10)

    def test_cap_checks(self, short_path):
        st = sufficient_stats(short_path, 2)
        with pytest.raises(ValueError):
            conditional_posterior(st, 1.0, covariance_matrix(3, PriorSpec()))
        # a smaller prior cap restricts the statistics
        post = conditional_posterior(st, 1.0, covariance_matrix(1, PriorSpec()))
        assert post.mean.size == 4


class TestLogMarginal:
    def test_no_data_is_zero(self):
        A = covariance_matrix(3, PriorSpec(OU(1.2, 1.0)))
        assert log_marginal(_stats(np.zeros(16), np.zeros((16, 16)), 3), 0.8, A) == 0.0

    def test_scalar_formula(self):
        # diagonal case factorizes into scalar Gaussian integrals
        a = np.array([1.3, 0.4])
        g = np.array([5.0, 2.0])
        m = np.array([0.7, -1.1])
        s = 0.9
        A = CovMatrix(0, np.diag(a))
        expected = sum(
            0.5 * math.log((1 / ai) / (s * s * gi + 1 / ai)) + 0.5 * s * s * mi**2 / (s * s * gi + 1 / ai)
            for ai, gi, mi in zip(a, g, m)
        )
        assert log_marginal(_stats(m, np.diag(g), 0), s, A) == pytest.approx(expected, rel=1e-13)

    def test_scalar_formula_quadrature(self):
        from scipy import integrate

        a, g, m, s = 0.8, 3.0, 1.4, 1.2
        val, _ = integrate.quad(
            lambda z: math.exp(s * z * m - 0.5 * s * s * g * z * z) * sps.norm.pdf(z, scale=math.sqrt(a)), -20, 20
        )
        A = CovMatrix(0, np.diag([a, 1.0]))
        got = log_marginal(_stats([m, 0.0], np.diag([g, 0.0]), 0), s, A)
        assert got == pytest.approx(math.log(val), abs=1e-10)

    @pytest.mark.parametrize("model", [Independent(0.5), OU(1.48, 1.0)])
    def test_textbook_form(self, model, short_path):
        r = 3
        st = sufficient_stats(short_path, r)
        A = covariance_matrix(r, PriorSpec(model))
        for s in (0.3, 1.0, 2.5):
            W = s * s * st.dense_gram() + np.linalg.inv(A.entries)
            ref = (
                -0.5 * np.linalg.slogdet(A.entries)[1]
                - 0.5 * np.linalg.slogdet(W)[1]
                + 0.5 * (s * st.mu) @ np.linalg.solve(W, s * st.mu)
            )
            assert log_marginal(st, s, A) == pytest.approx(ref, abs=1e-9)
            assert SpectralMarginal(st, A).log_marginal(s) == pytest.approx(ref, abs=1e-9)

    @pytest.mark.parametrize("model", [Independent(1.0), OU(0.5, 2.0)])
    def test_conjugacy_identity(self, model, short_path, rng):
        r = 3
        st = sufficient_stats(short_path, r)
        A = covariance_matrix(r, PriorSpec(model))
        G = st.dense_gram()
        s = 1.4
        lm = log_marginal(st, s, A)
        post = conditional_posterior(st, s, A)
        prior = sps.multivariate_normal(np.zeros(16), A.entries)
        cond = sps.multivariate_normal(post.mean, post.covariance())
        diffs = []
        for _ in range(10):
            z = post.mean + rng.standard_normal(16) * 0.3
            lhs = lm + cond.logpdf(z)
            rhs = prior.logpdf(z) + s * z @ st.mu - 0.5 * s * s * z @ G @ z
            diffs.append(lhs - rhs)
        assert max(abs(d) for d in diffs) < 1e-8

    def test_spectral_mean(self, short_path):
        st = sufficient_stats(short_path, 3)
        A = covariance_matrix(3, PriorSpec(OU(1.0, 1.0)))
        np.testing.assert_allclose(SpectralMarginal(st, A).mean(0.7), conditional_posterior(st, 0.7, A).mean, atol=1e-10)


class TestSampler:
    def test_fixed_rs_draws_match_conditional(self, short_path):
        st = sufficient_stats(short_path, 2)
        spec = PriorSpec(OU(1.0, 1.0))
        chain = mcmc_run(st, spec, 20_000, 2, 0.3, np.random.default_rng(4), r0=2, s0=1.3, move_r=False, move_s=False)
        post = conditional_posterior(st, 1.3, covariance_matrix(2, spec))
        Z = np.array([c.z for c in chain])
        cov = post.covariance()
        se = np.sqrt(np.diag(cov) / Z.shape[0])
        assert np.all(np.abs(Z.mean(0) - post.mean) <= 3 * se)
        emp = np.cov(Z.T)
        se_cov = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / Z.shape[0])
        assert np.all(np.abs(emp - cov) <= 4 * se_cov)
        assert all(c.r_accepted is None and c.s_accepted is None for c in chain)

    def test_state_shapes(self, short_path):
        chain = mcmc_run(short_path, PriorSpec(), 50, 3, 0.3, np.random.default_rng(0))
        for c in chain:
            assert c.z.size == 2 ** (c.r + 1) and c.s > 0 and 0 <= c.r <= 3
            assert c.drift().r == c.r

    def test_acceptance_on_standard_path(self, standard_path):
        mc = MCMCConfig()
        chain = mcmc_run(standard_path, PriorSpec(), mc.iters, mc.r_max, mc.step_s, np.random.default_rng(2024))
        acc = acceptance_rates(chain)
        assert 0.1 < acc["s"] < 0.7

    def test_s_move_antisymmetric(self, short_path, rng):
        post = MarginalPosterior(sufficient_stats(short_path, 3), PriorSpec(), 3)
        for _ in range(50):
            r = int(rng.integers(0, 4))
            s, t = np.exp(rng.normal(0, 1, 2))
            assert post.log_accept_s(r, s, t) == -post.log_accept_s(r, t, s)
            if r < 3:
                assert post.log_accept_r(r, r + 1, s) == -post.log_accept_r(r + 1, r, s)
        assert post.log_accept_r(3, 4, 1.0) == -math.inf
        assert post.log_accept_r(0, -1, 1.0) == -math.inf

    def test_reproducible(self, short_path):
        a = mcmc_run(short_path, PriorSpec(), 200, 4, 0.3, np.random.default_rng(8))
        b = mcmc_run(short_path, PriorSpec(), 200, 4, 0.3, np.random.default_rng(8))
        assert [(c.r, c.s, c.r_accepted, c.s_accepted) for c in a] == [(c.r, c.s, c.r_accepted, c.s_accepted) for c in b]

    def test_invalid_arguments(self, short_path):
        with pytest.raises(ValueError):
            mcmc_run(short_path, PriorSpec(), 0, 3, 0.3, np.random.default_rng(0))
        with pytest.raises(ValueError):
            mcmc_run(short_path, PriorSpec(), 10, 3, 0.3, np.random.default_rng(0), r0=4)
        with pytest.raises(ValueError):
            MarginalPosterior(sufficient_stats(short_path, 2), PriorSpec(), 3)

    def test_data_push_truncation_up(self):
        st = simulate_stats(STANDARD_TRUTH.build(), 0.0, 4000.0, 1e-3, np.random.default_rng(40), 8)
        chain = mcmc_run(st, PriorSpec(), 1500, 8, 0.3, np.random.default_rng(41))
        rs = np.array([c.r for c in chain[500:]])
        assert np.argmax(np.bincount(rs)) >= 2


def _state(r, s, z, m=None):
    return ChainState(r, s, np.asarray(z, float), 0.0, None if m is None else np.asarray(m, float))


class TestSummaries:
    def test_identical_states(self):
        m = np.array([0.3, -0.2, 1.0, 0.5])
        chain = [_state(1, 2.0, m + 1, m) for _ in range(5)]
        est = posterior_mean_drift(chain, 0, 3)
        np.testing.assert_allclose(est.coeffs[:4], 2.0 * m)
        assert np.all(est.coeffs[4:] == 0)

    def test_linear_in_halves(self, rng):
        chain = [_state(int(r), 1 + rng.random(), rng.standard_normal(2 ** (r + 1))) for r in rng.integers(0, 4, 40)]
        full = posterior_mean_drift(chain, 0, 4)
        h1 = posterior_mean_drift(chain[:20], 0, 4)
        h2 = posterior_mean_drift(chain[20:], 0, 4)
        np.testing.assert_allclose(full.coeffs, 0.5 * (h1.coeffs + h2.coeffs), atol=1e-14)
        # zero padding equals resampling on the grid and re-expanding
        x = np.arange(32) / 32
        direct = np.mean([c.s * Expansion(c.r, c.z)(x) for c in chain], axis=0)
        np.testing.assert_allclose(full(x), direct, atol=1e-13)

    def test_errors(self):
        chain = [_state(3, 1.0, np.zeros(16))]
        with pytest.raises(ValueError):
            posterior_mean_drift(chain, 1, 3)
        with pytest.raises(ValueError):
            posterior_mean_drift(chain, 0, 2)
        with pytest.raises(ValueError):
            credible_band(chain, 0, 0.0, 10)

    def test_longer_chain_agrees(self, standard_path):
        spec = PriorSpec()
        short = mcmc_run(standard_path, spec, 1500, 8, 0.3, np.random.default_rng(1))
        long = mcmc_run(standard_path, spec, 15000, 8, 0.3, np.random.default_rng(2))
        a = posterior_mean_drift(short, 500, 8)
        b = posterior_mean_drift(long, 5000, 8)
        assert norm(a - b, 2) < 0.05

    def test_band_envelope_and_mean(self, short_path):
        chain = mcmc_run(short_path, PriorSpec(), 400, 4, 0.3, np.random.default_rng(5))
        draws = draws_on_grid(chain, 100, 64)
        x, lo, hi = credible_band(chain, 100, 1.0, 64)
        np.testing.assert_allclose(lo, draws.min(0))
        np.testing.assert_allclose(hi, draws.max(0))
        mean = draws.mean(0)
        for level in (0.5, 0.8, 0.95):
            _, lo, hi = credible_band(chain, 100, level, 64)
            assert np.all(lo <= mean) and np.all(mean <= hi)

    def test_band_covers_truth(self):
        truth = STANDARD_TRUTH.build()
        st = sufficient_stats(standard_test_path(4000.0), 8)
        chain = mcmc_run(st, PriorSpec(), 1500, 8, 0.3, np.random.default_rng(61))
        x, lo, hi = credible_band(chain, 500, 0.95, 256)
        b0 = truth(x)
        assert np.mean((lo <= b0) & (b0 <= hi)) >= 0.8

import math

import numpy as np
import pytest
from scipy import integrate, optimize, special, stats

from schauderdrift.fsbasis import design_matrix, expand_dyadic, levels
from schauderdrift.prior import (
    OU,
    CovMatrix,
    Independent,
    PriorSpec,
    checked_cholesky,
    cov_entry_independent,
    cov_entry_ou,
    covariance_matrix,
    ou_covariance_block,
    ou_kernel,
    precision_matrix,
    sample_hierarchy,
    sample_prior,
    sample_scale,
    sample_truncation,
    scale_log_density,
    truncation_from_count,
    truncation_log_pmf,
    unit_variance_sigma2,
)
from schauderdrift.verify import disjoint_mask


def _expansion_operator(r):
    """Linear map from dyadic node values to coefficients, built column by column."""
    n = 2 ** (r + 1)
    return np.column_stack([expand_dyadic(np.eye(n)[:, m], r).coeffs for m in range(n)])


class TestSpec:
    def test_defaults_and_round_trip(self):
        spec = PriorSpec(OU(1.48, 2.0), poisson_rate=3.0, scale_shape=2.5, scale_rate=0.5)
        d = spec.to_dict()
        assert d["model"] == {"type": "ou", "gamma": 1.48, "sigma2": 2.0}
        assert PriorSpec.from_dict(d) == spec
        assert PriorSpec.from_dict({}) == PriorSpec()

    @pytest.mark.parametrize(
        "kwargs",
        [{"poisson_rate": 0.0}, {"scale_shape": -1.0}, {"scale_rate": 0.0}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PriorSpec(**kwargs)
        with pytest.raises(ValueError):
            Independent(0.0)
        with pytest.raises(ValueError):
            OU(1.0, -1.0)


class TestIndependent:
    def test_entries(self):
        assert cov_entry_independent(1, 1, 0.5) == 1.0
        assert cov_entry_independent(5, 5, 1.0) == 0.0625
        assert cov_entry_independent(3, 4, 0.7) == 0.0

    def test_matrix(self):
        A = covariance_matrix(3, PriorSpec(Independent(0.75)))
        np.testing.assert_array_equal(A.entries, np.diag(2.0 ** (-1.5 * levels(3))))


class TestOUKernel:
    def test_values(self):
        assert ou_kernel(0, 0, 1.0, 1.0) == pytest.approx(1.0 / math.tanh(0.5) / 2.0, rel=1e-14)
        assert ou_kernel(0, 0, 1.0, 1.0) == pytest.approx(1.081977, abs=1e-6)
        expected = (2 * math.exp(-0.5)) / (2 * (1 - math.exp(-1)))
        assert ou_kernel(0, 0.5, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)
        assert ou_kernel(0, 0.5, 1.0, 1.0) == pytest.approx(0.959519, abs=2e-6)
        assert ou_kernel(0, 0.5, 1.0, 1.0) == pytest.approx(0.5 / math.sinh(0.5), rel=1e-14)

    def test_cyclic_stationarity(self, rng):
        s, t = rng.uniform(0, 1, (2, 100))
        k = ou_kernel(s, t, 1.3, 0.7)
        np.testing.assert_allclose(k, ou_kernel(t, s, 1.3, 0.7))
        np.testing.assert_allclose(k, ou_kernel(0.0, np.abs(t - s), 1.3, 0.7))
        np.testing.assert_allclose(k, ou_kernel(0.0, 1 - np.abs(t - s), 1.3, 0.7))

    def test_unit_variance(self):
        for g in (0.5, 1.48):
            assert ou_kernel(0.3, 0.3, g, unit_variance_sigma2(g)) == pytest.approx(1.0, rel=1e-14)


class TestOUCoefficients:
    def test_closed_forms(self):
        assert cov_entry_ou(1, 1, 1.0, 1.0) == pytest.approx(1.081977, abs=1e-6)
        assert cov_entry_ou(2, 2, 1.0, 1.0) == pytest.approx(1.081977, abs=1e-6)
        assert cov_entry_ou(1, 2, 1.0, 1.0) == pytest.approx(0.959519, abs=2e-6)

    def test_bound_example(self):
        assert abs(cov_entry_ou(3, 4, 1.0, 1.0)) <= 0.37 * 2.0 ** (-1.5 * 2)

    @pytest.mark.parametrize("gamma,sigma2", [(1.0, 1.0), (0.5, 2.0), (1.48, 0.3)])
    def test_matches_transformed_kernel(self, gamma, sigma2):
        # covariance of node values pushed through the expansion operator
        r = 3
        x = np.arange(2 ** (r + 1)) / 2 ** (r + 1)
        K = ou_kernel(x[:, None], x[None, :], gamma, sigma2)
        M = _expansion_operator(r)
        np.testing.assert_allclose(ou_covariance_block(r, gamma, sigma2), M @ K @ M.T, atol=1e-14)
        for i, ip in [(1, 1), (3, 9), (5, 6), (16, 2), (11, 11)]:
            assert cov_entry_ou(i, ip, gamma, sigma2) == pytest.approx((M @ K @ M.T)[i - 1, ip - 1], abs=1e-14)

    def test_diagonal_bounds(self):
        A = covariance_matrix(4, PriorSpec(OU(1.48, 1.0))).entries
        lev = levels(4)[2:]
        d = np.diag(A)[2:]
        assert np.all(d >= 0.95 * 2.0**-lev / 4) and np.all(d <= 2.0**-lev / 4)

    def test_cholesky_r6(self):
        A = covariance_matrix(6, PriorSpec(OU(1.0, 1.0)))
        L = A.cholesky()
        np.testing.assert_allclose(L @ L.T, A.entries, atol=1e-13)

    def test_rows_subset(self):
        full = ou_covariance_block(4, 1.2, 1.0)
        np.testing.assert_array_equal(ou_covariance_block(4, 1.2, 1.0, rows=slice(3, 7)), full[3:7])


class TestCovMatrix:
    def test_shape_check(self):
        with pytest.raises(ValueError):
            CovMatrix(2, np.eye(4))

    def test_singular_rejected(self):
        a = np.ones((2, 2))
        with pytest.raises(np.linalg.LinAlgError):
            checked_cholesky(a)
        with pytest.raises(np.linalg.LinAlgError):
            checked_cholesky(np.diag([1.0, 1e-14]))

    def test_negative_cap(self):
        with pytest.raises(ValueError):
            covariance_matrix(-1, PriorSpec())


class TestPrecision:
    def test_diagonal(self):
        A = covariance_matrix(3, PriorSpec(Independent(1.0)))
        np.testing.assert_array_equal(precision_matrix(A), np.diag(1.0 / np.diag(A.entries)))

    def test_inverse(self):
        A = covariance_matrix(5, PriorSpec(OU(1.0, 1.0)))
        G = precision_matrix(A)
        assert np.max(np.abs(A.entries @ G - np.eye(64))) < 1e-8
        np.testing.assert_array_equal(G, G.T)

    def test_sparsity_r5(self):
        G = precision_matrix(covariance_matrix(5, PriorSpec(OU(1.0, 1.0))))
        mask = disjoint_mask(5)
        assert np.max(np.abs(G[mask])) <= 1e-8 * np.max(np.abs(G))
        # overlapping parent-child pairs are genuinely nonzero
        assert abs(G[2, 4]) > 1e-6 * np.max(np.abs(G))


def _exact_truncation_pmf(lam, rmax):
    y = np.arange(1, 2 ** (rmax + 1))
    p = stats.poisson.pmf(y, lam) / (1 - math.exp(-lam))
    return np.array([p[(y >= 2**r) & (y < 2 ** (r + 1))].sum() for r in range(rmax + 1)])


class TestTruncation:
    def test_count_map(self):
        assert truncation_from_count(5) == 2
        assert truncation_from_count(1) == 0
        assert truncation_from_count(8) == 3
        with pytest.raises(ValueError):
            truncation_from_count(0)

    def test_lambda_one(self):
        assert math.exp(truncation_log_pmf(0, 1.0)) == pytest.approx(math.exp(-1) / (1 - math.exp(-1)), rel=1e-13)
        assert math.exp(truncation_log_pmf(0, 1.0)) == pytest.approx(0.58198, abs=1e-5)

    @pytest.mark.parametrize("lam", [0.3, 1.0, 4.0, 8.0, 100.0])
    def test_normalized(self, lam):
        total = math.fsum(math.exp(truncation_log_pmf(r, lam)) for r in range(40))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_matches_exact_sum(self):
        for lam in (2.0, 8.0):
            exact = _exact_truncation_pmf(lam, 8)
            got = np.exp([truncation_log_pmf(r, lam) for r in range(9)])
            np.testing.assert_allclose(got, exact, rtol=1e-10, atol=1e-300)

    def test_tail_decreasing(self):
        lp = [truncation_log_pmf(r, 8.0) for r in range(3, 30)]
        assert all(b < a for a, b in zip(lp, lp[1:]))
        assert truncation_log_pmf(-1, 8.0) == -math.inf

    def test_large_levels(self):
        # windowed branch and cdf branch
        assert truncation_log_pmf(20, 5.0) < -1e6
        lam = 3e5
        got = math.exp(truncation_log_pmf(18, lam))
        exact = stats.poisson.cdf(2**19 - 1, lam) - stats.poisson.cdf(2**18 - 1, lam)
        assert got == pytest.approx(exact, rel=1e-9)

    def test_empirical_pmf(self):
        rng = np.random.default_rng(3)
        n = 10**6
        draws = sample_truncation(4.0, rng, size=n)
        exact = _exact_truncation_pmf(4.0, 6)
        freq = np.bincount(draws, minlength=7)[:7] / n
        se = np.sqrt(exact * (1 - exact) / n)
        assert np.all(np.abs(freq - exact) <= 3 * se + 1e-12)

    def test_scalar_draw(self, rng):
        r = sample_truncation(4.0, rng)
        assert isinstance(r, int) and r >= 0


class TestScale:
    @pytest.mark.parametrize("M", [2.0, 5.0, 10.0])
    def test_tail_bound(self, M):
        rng = np.random.default_rng(11)
        x = sample_scale(2.0, 1.0, rng, size=10**6) ** 2
        p = np.mean(x >= M)
        bound = M**-2.0 / special.gamma(2.0)
        assert p <= bound + 3 * math.sqrt(p * (1 - p) / x.size)

    def test_mean(self):
        rng = np.random.default_rng(5)
        x = sample_scale(3.0, 1.0, rng, size=10**6) ** 2
        se = np.std(x) / math.sqrt(x.size)
        assert abs(x.mean() - 0.5) <= 3 * se

    def test_positive(self, rng):
        assert np.all(sample_scale(2.0, 1.0, rng, size=1000) > 0)
        assert sample_scale(2.0, 1.0, rng) > 0

    @pytest.mark.parametrize("shape,rate", [(2.0, 1.0), (3.0, 0.5), (0.7, 2.0)])
    def test_density_normalized(self, shape, rate):
        total, _ = integrate.quad(lambda s: math.exp(scale_log_density(s, shape, rate)), 0, np.inf)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_density_matches_transform(self):
        for s in (0.2, 0.9, 3.0):
            direct = stats.invgamma.pdf(s * s, 2.0, scale=1.5) * 2 * s
            assert math.exp(scale_log_density(s, 2.0, 1.5)) == pytest.approx(direct, rel=1e-12)

    def test_mode(self):
        shape, rate = 2.0, 1.0
        res = optimize.minimize_scalar(lambda s: -scale_log_density(s, shape, rate), bounds=(0.05, 5), method="bounded",
                                       options={"xatol": 1e-10})
        assert res.x == pytest.approx(math.sqrt(2 * rate / (2 * shape + 1)), rel=1e-6)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            scale_log_density(0.0, 2.0, 1.0)


class TestSamplePrior:
    def test_zero_scale(self, rng):
        A = covariance_matrix(2, PriorSpec())
        assert np.all(sample_prior(2, 0.0, A, rng).coeffs == 0)

    def test_cap_mismatch(self, rng):
        with pytest.raises(ValueError):
            sample_prior(3, 1.0, covariance_matrix(2, PriorSpec()), rng)

    def test_empirical_covariance(self):
        rng = np.random.default_rng(8)
        A = covariance_matrix(2, PriorSpec(OU(1.0, 1.0)))
        s = 1.7
        Z = np.array([sample_prior(2, s, A, rng).coeffs for _ in range(100_000)])
        emp = Z.T @ Z / Z.shape[0]
        target = s * s * A.entries
        se = np.sqrt((target**2 + np.outer(np.diag(target), np.diag(target))) / Z.shape[0])
        assert np.all(np.abs(emp - target) <= 4 * se)

    def test_stationary_variance_independent_half(self):
        # Var(b(t) | S = s, R = r) = s^2 sum_i A_ii psi_i(t)^2
        r = 10
        A = covariance_matrix(r, PriorSpec(Independent(0.5))).entries
        t = np.array([0.0, 0.25, 0.5, 0.3, 0.61])
        var = (design_matrix(r, t) ** 2) @ np.diag(A)
        np.testing.assert_allclose(var, 1.0, rtol=0.02)
        np.testing.assert_allclose(var[:3], 1.0, rtol=1e-14)

    def test_hierarchy(self, rng):
        for _ in range(20):
            r, s, b = sample_hierarchy(PriorSpec(), rng, r_cap=3)
            assert 0 <= r <= 3 and s > 0 and b.r == r

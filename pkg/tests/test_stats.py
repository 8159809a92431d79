import warnings

import numpy as np
import pytest
from scipy import stats as sps

from mycelink import (
    DegenerateDataError,
    InvalidSpecError,
    SingularRegressionError,
    adf_test,
    anderson_darling,
    granger_causality,
    kruskal_wallis,
    median_iqr,
)
from mycelink import stats as mstats

statsmodels = pytest.importorskip("statsmodels")
from statsmodels.tsa.stattools import adfuller, grangercausalitytests  # noqa: E402


class TestAndersonDarling:
    def test_statistic_matches_scipy(self, rng):
        for n in (8, 30, 100, 500):
            x = rng.normal(3.0, 2.0, n)
            res = anderson_darling(x)
            ref = sps.anderson(x, dist="norm")
            corrected = ref.statistic * (1 + 4.0 / n - 25.0 / n**2)
            assert res.statistic == pytest.approx(corrected, rel=1e-12)
            assert res.p_value is None

    def test_decision_is_thresholded_corrected_statistic(self, rng):
        for _ in range(25):
            x = rng.normal(0, 1, rng.integers(8, 200))
            res = anderson_darling(x)
            assert res.reject_at_05 == (res.statistic > 0.752)

    def test_accepts_gaussian_rejects_uniform(self, rng):
        gauss = rng.normal(0, 1, 400)
        flat = rng.uniform(0, 1, 400)
        assert not anderson_darling(gauss).reject_at_05
        assert anderson_darling(flat).reject_at_05

    def test_minimum_length(self, rng):
        with pytest.raises(DegenerateDataError):
            anderson_darling(rng.normal(0, 1, 7))

    def test_constant_input(self):
        with pytest.raises(DegenerateDataError):
            anderson_darling(np.ones(20))


class TestAdf:
    def test_matches_statsmodels(self, rng):
        x = np.cumsum(rng.normal(0, 1, 300)) * 0.1 + rng.normal(0, 1, 300)
        res = adf_test(x)
        stat_ref, p_ref, used_lag, *_ = adfuller(x, regression="c", autolag="AIC")
        assert res.statistic == pytest.approx(stat_ref, rel=1e-10)
        assert res.p_value == pytest.approx(p_ref, rel=1e-8)

    def test_matches_statsmodels_at_given_budget(self, rng):
        x = rng.normal(0, 1, 250) + 0.3 * np.sin(np.arange(250) / 9.0)
        for lag in (2, 5, 12):
            res = adf_test(x, max_lag=lag)
            stat_ref, p_ref, *_ = adfuller(x, regression="c", maxlag=lag, autolag="AIC")
            assert res.statistic == pytest.approx(stat_ref, rel=1e-10)
            assert res.p_value == pytest.approx(p_ref, rel=1e-8)

    def test_random_walk_not_rejected(self, rng):
        walk = np.cumsum(rng.normal(0, 1, 500))
        assert not adf_test(walk).reject_at_05

    def test_white_noise_rejected(self, rng):
        assert adf_test(rng.normal(0, 1, 500)).reject_at_05

    def test_constant_series(self):
        with pytest.raises(DegenerateDataError):
            adf_test(np.full(100, 2.5))

    def test_too_short_for_lag_budget(self, rng):
        with pytest.raises(DegenerateDataError):
            adf_test(rng.normal(0, 1, 30), max_lag=12)


class TestGranger:
    def make_pair(self, rng, coupled: bool, n: int = 800):
        x = rng.normal(0, 1, n)
        y = np.zeros(n)
        e = rng.normal(0, 0.5, n)
        for k in range(2, n):
            y[k] = 0.3 * y[k - 1] + (0.5 * x[k - 2] if coupled else 0.0) + e[k]
        return x, y

    def test_matches_statsmodels_chi2_form(self, rng):
        x, y = self.make_pair(rng, coupled=True)
        lag = 3
        res = granger_causality(x, y, lag)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FutureWarning)
            ref = grangercausalitytests(np.column_stack([y, x]), maxlag=[lag], verbose=False)
        stat_ref, p_ref, _ = ref[lag][0]["ssr_chi2test"]
        assert res.statistic == pytest.approx(stat_ref, rel=1e-12)
        assert res.p_value == pytest.approx(p_ref, rel=1e-12, abs=1e-300)

    def test_detects_direction(self, rng):
        x, y = self.make_pair(rng, coupled=True)
        assert granger_causality(x, y, 4).reject_at_05
        assert not granger_causality(y, x, 4).reject_at_05

    def test_independent_not_rejected(self, rng):
        x, y = self.make_pair(rng, coupled=False)
        assert not granger_causality(x, y, 4).reject_at_05

    def test_needs_enough_rows(self, rng):
        with pytest.raises(DegenerateDataError):
            granger_causality(rng.normal(0, 1, 12), rng.normal(0, 1, 12), 4)
        with pytest.raises(InvalidSpecError):
            granger_causality(rng.normal(0, 1, 50), rng.normal(0, 1, 49), 4)

    def test_duplicate_regressor_raises(self):
        x = np.sin(np.arange(100.0))
        with pytest.raises(SingularRegressionError):
            granger_causality(x, x, 2)


class TestKruskalWallis:
    def test_matches_scipy(self, rng):
        groups = [rng.normal(m, 1, 40) for m in (0.0, 0.2, 0.5)]
        res = kruskal_wallis(groups)
        ref_stat, ref_p = sps.kruskal(*groups)
        assert res.statistic == pytest.approx(ref_stat, rel=1e-12)
        assert res.p_value == pytest.approx(ref_p, rel=1e-12)
        assert res.reject_at_05 == (res.p_value < 0.05)

    def test_with_ties(self, rng):
        groups = [rng.integers(0, 5, 60).astype(float) for _ in range(3)]
        res = kruskal_wallis(groups)
        ref_stat, ref_p = sps.kruskal(*groups)
        assert res.statistic == pytest.approx(ref_stat, rel=1e-12)
        assert res.p_value == pytest.approx(ref_p, rel=1e-12)

    def test_identical_groups_degenerate(self):
        groups = [np.full(10, 3.0), np.full(15, 3.0)]
        res = kruskal_wallis(groups)
        assert (res.statistic, res.p_value, res.reject_at_05) == (0.0, 1.0, False)

    def test_detects_shift(self, rng):
        a = rng.normal(0, 1, 100)
        b = rng.normal(1.0, 1, 100)
        assert kruskal_wallis([a, b]).reject_at_05

    def test_needs_two_groups(self, rng):
        with pytest.raises(InvalidSpecError):
            kruskal_wallis([rng.normal(0, 1, 10)])


class TestResultAndSummaries:
    def test_result_validation(self):
        ok = mstats.TestResult(statistic=1.0, p_value=None, reject_at_05=False)
        assert ok.p_value is None
        with pytest.raises(InvalidSpecError):
            mstats.TestResult(statistic=1.0, p_value=1.5, reject_at_05=True)
        with pytest.raises(InvalidSpecError):
            mstats.TestResult(statistic=1.0, p_value=-0.1, reject_at_05=True)

    def test_median_iqr(self):
        med, iqr = median_iqr([1.0, 2.0, 3.0, 4.0, 5.0])
        assert med == 3.0
        assert iqr == pytest.approx(2.0)
        ref = sps.iqr([1, 2, 3, 4, 5])
        assert iqr == pytest.approx(ref)

    def test_median_iqr_empty(self):
        with pytest.raises(DegenerateDataError):
            median_iqr([])

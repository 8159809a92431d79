"""Hypothesis tests used by the transmission analysis.

All four tests are implemented directly on their textbook definitions so
their behavior is pinned by this package rather than by whichever library
version happens to be installed. The test suite cross-checks each one
against an independent implementation.

Conventions: every test returns a :class:`TestResult`; ``p_value`` is None
when the test is decided against a fixed critical value instead of a
distribution; ``reject_at_05`` is the 5% decision either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import DegenerateDataError, InvalidSpecError, SingularRegressionError
from .validation import as_float_array, check_nonnegative_int, check_positive_int

__all__ = [
    "TestResult",
    "anderson_darling",
    "adf_test",
    "granger_causality",
    "kruskal_wallis",
    "median_iqr",
]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float | None
    reject_at_05: bool

    def __post_init__(self):
        if self.p_value is not None and not (0.0 <= self.p_value <= 1.0):
            raise InvalidSpecError(f"p_value out of range: {self.p_value!r}")


def _ols(design: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    coefs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise SingularRegressionError(
            f"design matrix is rank deficient ({rank} < {design.shape[1]} columns)"
        )
    resid = target - design @ coefs
    return coefs, float(resid @ resid)


def anderson_darling(values) -> TestResult:
    """Anderson-Darling test of normality with estimated mean and spread.

    The statistic is size-corrected by (1 + 4/n - 25/n^2) and compared to
    the 5% critical value 0.752 for the estimated-parameters case. No
    closed-form p-value is reported.
    """
    x = as_float_array(values, "values", min_length=8)
    n = x.size
    std = x.std(ddof=1)
    if std == 0.0:
        raise DegenerateDataError("values are constant, spread cannot be estimated")
    z = np.sort((x - x.mean()) / std)
    cdf = np.clip(sps.norm.cdf(z), 1e-300, 1.0 - 1e-16)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(cdf) + np.log(1.0 - cdf[::-1])))
    a2 *= 1.0 + 4.0 / n - 25.0 / (n * n)
    return TestResult(statistic=float(a2), p_value=None, reject_at_05=bool(a2 > 0.752))


# Unit-root t-statistic response surface for the constant-only case
# (MacKinnon 1994). Polynomials are in ascending order.
_ADF_TAU_STAR = -1.61
_ADF_TAU_MIN = -18.83
_ADF_TAU_MAX = 2.74
_ADF_SMALL_P = (2.1659, 1.4412, 0.038269)
_ADF_LARGE_P = (1.7339, 0.93202, -0.12745, -0.010368)


def _adf_pvalue(stat: float) -> float:
    if stat > _ADF_TAU_MAX:
        return 1.0
    if stat < _ADF_TAU_MIN:
        return 0.0
    coefs = _ADF_SMALL_P if stat <= _ADF_TAU_STAR else _ADF_LARGE_P
    return float(sps.norm.cdf(np.polyval(coefs[::-1], stat)))


def _adf_design(y: np.ndarray, p: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    dy = np.diff(y)
    rows = np.arange(start, dy.size)
    cols = [np.ones(rows.size), y[rows]]
    for j in range(1, p + 1):
        cols.append(dy[rows - j])
    return np.column_stack(cols), dy[rows]


def adf_test(values, max_lag: int | None = None) -> TestResult:
    """Augmented Dickey-Fuller unit-root test, constant-only regression.

    The augmentation order is chosen by AIC over 0..max_lag on a common
    sample, then the statistic comes from a refit at that order on the
    full usable sample. ``max_lag`` defaults to floor(12 * (n/100)^0.25).
    Rejection means the unit-root hypothesis fails, i.e. the series looks
    stationary.
    """
    y = as_float_array(values, "values", min_length=12)
    n = y.size
    if max_lag is None:
        max_lag = int(12.0 * (n / 100.0) ** 0.25)
    else:
        max_lag = check_nonnegative_int(max_lag, "max_lag")
    if np.ptp(y) == 0.0:
        raise DegenerateDataError("series is constant, unit-root test undefined")
    # common AIC sample starts at max_lag; need rows comfortably past the columns
    if n - 1 - max_lag < max_lag + 8:
        raise DegenerateDataError(
            f"series of length {n} too short for max_lag={max_lag}"
        )

    best_p, best_aic = 0, math.inf
    for p in range(max_lag + 1):
        design, target = _adf_design(y, p, start=max_lag)
        _, rss = _ols(design, target)
        nobs = target.size
        if rss <= 0.0:
            raise DegenerateDataError("difference regression fits exactly, no noise to test")
        aic = nobs * math.log(rss / nobs) + 2.0 * (p + 2)
        if aic < best_aic:
            best_p, best_aic = p, aic

    design, target = _adf_design(y, best_p, start=best_p)
    coefs, rss = _ols(design, target)
    nobs, k = target.size, design.shape[1]
    sigma2 = rss / (nobs - k)
    xtx_inv = np.linalg.inv(design.T @ design)
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    stat = float(coefs[1] / se)
    p_value = _adf_pvalue(stat)
    return TestResult(statistic=stat, p_value=p_value, reject_at_05=bool(p_value < 0.05))


def granger_causality(x, y, max_lag: int) -> TestResult:
    """Lagrange-multiplier Granger test of whether x helps predict y.

    Compares y regressed on a constant plus its own ``max_lag`` lags
    against the same regression augmented with x lags 1..max_lag. The
    statistic nobs * (RSS_r - RSS_u) / RSS_u is chi-square with
    ``max_lag`` degrees of freedom under the no-influence hypothesis.

    Differencing for stationarity is the caller's job; this function
    tests exactly the series it is given.
    """
    xa = as_float_array(x, "x")
    ya = as_float_array(y, "y")
    if xa.size != ya.size:
        raise InvalidSpecError("x and y must have equal length")
    lag = check_positive_int(max_lag, "max_lag")
    n = ya.size
    nobs = n - lag
    if nobs < 2 * lag + 5:
        raise DegenerateDataError(f"series of length {n} too short for max_lag={lag}")

    rows = np.arange(lag, n)
    restricted = [np.ones(nobs)] + [ya[rows - j] for j in range(1, lag + 1)]
    unrestricted = restricted + [xa[rows - j] for j in range(1, lag + 1)]
    _, rss_r = _ols(np.column_stack(restricted), ya[rows])
    _, rss_u = _ols(np.column_stack(unrestricted), ya[rows])

    if rss_u <= 0.0:
        if rss_r <= 0.0:
            raise DegenerateDataError("both regressions fit exactly, test undefined")
        return TestResult(statistic=math.inf, p_value=0.0, reject_at_05=True)
    stat = float(nobs * (rss_r - rss_u) / rss_u)
    stat = max(stat, 0.0)
    p_value = float(sps.chi2.sf(stat, lag))
    return TestResult(statistic=stat, p_value=p_value, reject_at_05=bool(p_value < 0.05))


def kruskal_wallis(groups) -> TestResult:
    """Kruskal-Wallis rank test that several groups share a distribution.

    Applies the tie correction. When every observation across all groups
    is identical the statistic is defined as 0 with p = 1.
    """
    arrays = [as_float_array(g, f"groups[{i}]") for i, g in enumerate(groups)]
    if len(arrays) < 2:
        raise InvalidSpecError("need at least two groups")
    pooled = np.concatenate(arrays)
    n_total = pooled.size
    if np.ptp(pooled) == 0.0:
        return TestResult(statistic=0.0, p_value=1.0, reject_at_05=False)

    ranks = sps.rankdata(pooled)
    h = 0.0
    start = 0
    for arr in arrays:
        r = ranks[start : start + arr.size]
        h += r.sum() ** 2 / arr.size
        start += arr.size
    h = 12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)

    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    correction = 1.0 - tie_term / (n_total**3 - n_total)
    if correction <= 0.0:
        return TestResult(statistic=0.0, p_value=1.0, reject_at_05=False)
    h /= correction

    df = len(arrays) - 1
    p_value = float(sps.chi2.sf(h, df))
    return TestResult(statistic=float(h), p_value=p_value, reject_at_05=bool(p_value < 0.05))


def median_iqr(values) -> tuple[float, float]:
    """Median and interquartile range with linearly interpolated quartiles."""
    x = as_float_array(values, "values", min_length=1)
    q25, q75 = np.percentile(x, [25.0, 75.0])
    return float(np.median(x)), float(q75 - q25)

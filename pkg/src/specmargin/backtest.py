"""Forecast evaluation: PIT values, VaR exceedances and residual normality tests."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import chi2_cdf, chi2_sf, norm_cdf, norm_ppf
from .errors import AlignmentError, DegenerateInputError, InsufficientDataError, ValidationError
from .garch import RollingForecasts
from .riskmeasures import check_confidence
from .timeseries import ReturnSeries, central_moments

KUPIEC_VARIANTS = ("min_tail", "exact_two_sided", "doubled_one_sided", "normal_two_sided",
                   "likelihood_ratio")
# Reproduces the published exceedance p-values (see scripts/kupiec_certification.py).
DEFAULT_KUPIEC_VARIANT = "min_tail"


@dataclass(frozen=True)
class PitSeries:
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if np.any((self.values < 0) | (self.values > 1)):
            raise ValidationError("PIT values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ResidualTests:
    n: int
    mean: float
    std: float
    skewness: float
    kurtosis: float
    p_values: dict

    @property
    def moments(self) -> tuple[float, float, float, float]:
        return (self.mean, self.std, self.skewness, self.kurtosis)


@dataclass(frozen=True)
class BacktestReport:
    n: int
    alpha: float
    exceedances: int
    expected_exceedances: float
    residual_moments: tuple[float, float, float, float]
    p_values: dict
    kupiec_variant: str

    def as_dict(self) -> dict:
        mean, std, skew, kurt = self.residual_moments
        return {
            "n": self.n,
            "alpha": self.alpha,
            "exceedances": self.exceedances,
            "expected_exceedances": self.expected_exceedances,
            "residual_moments": {"mean": mean, "std": std, "skewness": skew, "kurtosis": kurt},
            "p_values": dict(self.p_values),
            "kupiec_variant": self.kupiec_variant,
        }


def align(returns: ReturnSeries, forecasts: RollingForecasts) -> np.ndarray:
    """Return values on the forecast dates; every forecast date must be present."""
    if len(forecasts) == 0:
        raise AlignmentError("no forecasts")
    fdates = forecasts.dates
    idx = np.searchsorted(returns.dates, fdates)
    idx_c = np.clip(idx, 0, max(len(returns.dates) - 1, 0))
    if len(returns.dates) == 0 or not np.all(returns.dates[idx_c] == fdates):
        found = 0 if len(returns.dates) == 0 else int(np.sum(returns.dates[idx_c] == fdates))
        if found == 0:
            raise AlignmentError("returns and forecasts share no dates")
        raise AlignmentError(f"{len(fdates) - found} forecast dates have no realized return")
    return returns.values[idx_c]


def pit(returns: ReturnSeries, forecasts: RollingForecasts) -> PitSeries:
    """``Phi((r_t - mu_t) / sigma_t)`` with the previous day's forecast."""
    r = align(returns, forecasts)
    return PitSeries(forecasts.dates, np.asarray(norm_cdf((r - forecasts.mu) / forecasts.sigma)))


def var_path(forecasts: RollingForecasts, alpha: float) -> np.ndarray:
    return -forecasts.mu + forecasts.sigma * float(norm_ppf(check_confidence(alpha)))


def count_exceedances(returns: ReturnSeries, forecasts: RollingForecasts, alpha: float = 0.95,
                      var: np.ndarray | None = None) -> int:
    """Days with ``r_t < -VaR_t``; a tie is not an exceedance."""
    r = align(returns, forecasts)
    v = var_path(forecasts, alpha) if var is None else np.asarray(var, dtype=float)
    return int(np.sum(r < -v))


def kupiec_test(exceedances: int, n: int, alpha: float = 0.95,
                variant: str = DEFAULT_KUPIEC_VARIANT) -> float:
    """p-value for ``exceedances`` out of ``n`` under Binomial(n, 1 - alpha).

    Variants
    --------
    min_tail
        ``min(P(X <= x), P(X > x))``, the smaller binomial tail beside x.
    exact_two_sided
        Sum of the probabilities of all outcomes no likelier than x.
    doubled_one_sided
        ``min(1, 2 * min(P(X <= x), P(X >= x)))``.
    normal_two_sided
        Two-sided normal approximation without continuity correction.
    likelihood_ratio
        Kupiec's proportion-of-failures LR statistic against chi-square(1).
    """
    x, n = int(exceedances), int(n)
    if not 0 <= x <= n or n < 1:
        raise ValidationError(f"need 0 <= exceedances <= n, got {x} of {n}")
    p = 1.0 - check_confidence(alpha)
    dist = stats.binom(n, p)
    if variant == "min_tail":
        return float(min(dist.cdf(x), dist.sf(x)))
    if variant == "exact_two_sided":
        pmf = dist.pmf(np.arange(n + 1))
        return float(min(1.0, pmf[pmf <= dist.pmf(x) * (1 + 1e-7)].sum()))
    if variant == "doubled_one_sided":
        return float(min(1.0, 2.0 * min(dist.cdf(x), dist.sf(x - 1))))
    if variant == "normal_two_sided":
        z = (x - n * p) / math.sqrt(n * p * (1 - p))
        return float(2.0 * stats.norm.sf(abs(z)))
    if variant == "likelihood_ratio":
        phat = x / n
        ll0 = (n - x) * math.log1p(-p) + x * math.log(p)
        ll1 = (n - x) * (math.log1p(-phat) if x < n else 0.0) + (x * math.log(phat) if x else 0.0)
        return float(chi2_sf(max(-2.0 * (ll0 - ll1), 0.0), 1))
    raise ValidationError(f"unknown Kupiec variant {variant!r}; choose from {KUPIEC_VARIANTS}")


def z_test(mean: float, n: int) -> float:
    return float(2.0 * stats.norm.sf(abs(mean * math.sqrt(n))))


def t_test(mean: float, sd: float, n: int) -> float:
    return float(2.0 * stats.t.sf(abs(mean * math.sqrt(n) / sd), n - 1))


def variance_ratio_test(sd: float, n: int) -> float:
    q = (n - 1) * sd * sd
    return float(min(1.0, 2.0 * min(chi2_cdf(q, n - 1), chi2_sf(q, n - 1))))


def jarque_bera_test(skewness: float, kurtosis: float, n: int) -> float:
    jb = n / 6.0 * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)
    return float(chi2_sf(jb, 2))


def residual_tests(std_residuals) -> ResidualTests:
    """Normality checks of standardized residuals, assuming independence.

    The z-test fixes the variance at 1, the t-test uses the sample standard
    deviation, the variance-ratio test is two-sided on ``(n-1) s^2`` against
    chi-square(n-1), and Jarque-Bera uses moment-ratio skewness and
    non-excess kurtosis.
    """
    x = np.asarray(std_residuals, dtype=float)
    n = len(x)
    if n < 8:
        raise InsufficientDataError(f"residual tests need n >= 8, got {n}")
    mean, m2, m3, m4 = central_moments(x)
    sd = float(np.std(x, ddof=1))
    if not m2 > 0:
        raise DegenerateInputError("standardized residuals have zero variance")
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    p = {
        "z_test": z_test(mean, n),
        "t_test": t_test(mean, sd, n),
        "variance_ratio": variance_ratio_test(sd, n),
        "jarque_bera": jarque_bera_test(skew, kurt, n),
    }
    return ResidualTests(n, mean, sd, skew, kurt, p)


def ks_uniform(values) -> float:
    return float(stats.kstest(np.asarray(values, dtype=float), "uniform").pvalue)


def backtest(returns: ReturnSeries, forecasts: RollingForecasts, alpha: float = 0.95,
             kupiec_variant: str = DEFAULT_KUPIEC_VARIANT) -> BacktestReport:
    r = align(returns, forecasts)
    z = (r - forecasts.mu) / forecasts.sigma
    pits = np.asarray(norm_cdf(z))
    n = len(r)
    x = int(np.sum(r < -var_path(forecasts, alpha)))
    rt = residual_tests(z)
    p_values = {
        "kupiec": kupiec_test(x, n, alpha, kupiec_variant),
        **rt.p_values,
        "ks_uniform": ks_uniform(pits),
    }
    return BacktestReport(n, alpha, x, n * (1 - alpha), rt.moments, p_values, kupiec_variant)


def write_pit_csv(series: PitSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "pit"])
        for d, v in zip(series.dates, series.values):
            w.writerow([str(d), repr(float(v))])

"""Price ingestion, percent log returns and descriptive diagnostics."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .distributions import chi2_sf
from .errors import DegenerateInputError, InsufficientDataError, ParseError, ValidationError

DEFAULT_LAG = 12


@dataclass(frozen=True)
class PriceSeries:
    dates: np.ndarray  # datetime64[D]
    prices: np.ndarray

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.prices):
            raise ValidationError("dates and prices differ in length")
        if len(self.prices) < 2:
            raise InsufficientDataError("a price series needs at least 2 observations")
        if not np.all(self.prices > 0):
            raise ValidationError("prices must be strictly positive")
        if not np.all(np.diff(self.dates) > np.timedelta64(0, "D")):
            raise ValidationError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.prices)


@dataclass(frozen=True)
class ReturnSeries:
    """Daily returns in percent, ``100 * (ln p_t - ln p_{t-1})``."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.values):
            raise ValidationError("dates and values differ in length")

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def slice(self, start: int, stop: int) -> "ReturnSeries":
        return ReturnSeries(self.dates[start:stop], self.values[start:stop])

    @classmethod
    def from_values(cls, values: Sequence[float], start: str = "2000-01-03") -> "ReturnSeries":
        """Attach consecutive weekday dates to raw values (synthetic data, tests)."""
        values = np.asarray(values, dtype=float)
        dates = np.busday_offset(np.datetime64(start, "D"), np.arange(len(values)), roll="forward")
        return cls(dates.astype("datetime64[D]"), values)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    std_dev: float
    skewness: float
    kurtosis: float
    minimum: float
    maximum: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "std_dev": self.std_dev,
            "skewness": None if math.isnan(self.skewness) else self.skewness,
            "kurtosis": None if math.isnan(self.kurtosis) else self.kurtosis,
            "minimum": self.minimum,
            "maximum": self.maximum,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float

    def __iter__(self):
        yield self.statistic
        yield self.p_value


@dataclass(frozen=True)
class DependenceReport:
    ljung_box_returns: TestResult
    ljung_box_squared: TestResult
    arch_lm: TestResult
    lag: int

    def as_dict(self) -> dict:
        return {
            "lag": self.lag,
            "ljung_box_returns": {"statistic": self.ljung_box_returns.statistic,
                                  "p_value": self.ljung_box_returns.p_value},
            "ljung_box_squared": {"statistic": self.ljung_box_squared.statistic,
                                  "p_value": self.ljung_box_squared.p_value},
            "arch_lm": {"statistic": self.arch_lm.statistic, "p_value": self.arch_lm.p_value},
        }


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def load_prices(source, date_column: str = "date", price_column: str = "close") -> PriceSeries:
    """Read a ``date,close`` style CSV into a :class:`PriceSeries`.

    ``source`` may be a path, raw bytes, or a text/binary stream. Dates must
    be ISO ``YYYY-MM-DD``. Rows are sorted by date; a non-numeric or
    non-positive price raises :class:`ParseError` / :class:`ValidationError`
    naming the 1-based data row.
    """
    fh, close = _open_text(source)
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("empty CSV: header row required")
        missing = [c for c in (date_column, price_column) if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"missing column(s) {missing}; header is {reader.fieldnames}")
        dates: list[dt.date] = []
        prices: list[float] = []
        for row_no, row in enumerate(reader, start=1):
            raw_date, raw_price = row.get(date_column), row.get(price_column)
            if raw_date is None or raw_price is None:
                raise ParseError(f"row {row_no}: too few fields", row=row_no)
            try:
                day = dt.date.fromisoformat(raw_date.strip())
            except ValueError:
                raise ParseError(f"row {row_no}: bad date {raw_date!r}", row=row_no) from None
            try:
                price = float(raw_price)
            except ValueError:
                raise ParseError(f"row {row_no}: non-numeric price {raw_price!r}", row=row_no) from None
            if not math.isfinite(price) or price <= 0:
                raise ValidationError(
                    f"row {row_no}: price must be positive, got {raw_price.strip()}", row=row_no)
            dates.append(day)
            prices.append(price)
    except csv.Error as exc:
        raise ParseError(f"malformed CSV near line {reader.line_num}: {exc}", row=reader.line_num) from None
    finally:
        if close:
            fh.close()

    if len(prices) < 2:
        raise InsufficientDataError(f"need at least 2 valid rows, got {len(prices)}")
    d = np.array(dates, dtype="datetime64[D]")
    order = np.argsort(d, kind="stable")
    d = d[order]
    dup = np.nonzero(np.diff(d) == np.timedelta64(0, "D"))[0]
    if dup.size:
        raise ValidationError(f"duplicate date {d[dup[0]]}")
    return PriceSeries(d, np.asarray(prices, dtype=float)[order])


def log_returns(prices: PriceSeries) -> ReturnSeries:
    logp = np.log(prices.prices)
    return ReturnSeries(prices.dates[1:], 100.0 * np.diff(logp))


def write_returns_csv(returns: ReturnSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "return"])
        for d, r in zip(returns.dates, returns.values):
            w.writerow([str(d), repr(float(r))])


def read_returns_csv(path) -> ReturnSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    dates = np.array([r["date"] for r in rows], dtype="datetime64[D]")
    return ReturnSeries(dates, np.array([float(r["return"]) for r in rows]))


def _as_array(series) -> np.ndarray:
    if isinstance(series, ReturnSeries):
        return series.values
    return np.asarray(series, dtype=float)


def central_moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, then central moments m2, m3, m4 with divisor n."""
    mean = float(np.mean(x))
    d = x - mean
    return mean, float(np.mean(d**2)), float(np.mean(d**3)), float(np.mean(d**4))


def summarize(returns) -> SummaryStats:
    """Table-2 style moments; skewness m3/m2^1.5 and non-excess kurtosis m4/m2^2."""
    x = _as_array(returns)
    n = len(x)
    if n < 4:
        raise InsufficientDataError(f"summary statistics need n >= 4, got {n}")
    mean, m2, _, _ = central_moments(x)
    std = float(np.std(x, ddof=1))
    degenerate = not m2 > 0 or np.ptp(x) == 0
    if degenerate:
        skew = kurt = float("nan")
        std = 0.0
    else:
        # standardize first so tiny spreads do not underflow m2**2
        z = (x - mean) / math.sqrt(m2)
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4))
    return SummaryStats(n, mean, std, skew, kurt, float(x.min()), float(x.max()), degenerate)


def autocorrelations(x: np.ndarray, lag: int) -> np.ndarray:
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0:
        raise DegenerateInputError("autocorrelation undefined for a constant series")
    return np.array([float(d[j:] @ d[:-j]) / denom for j in range(1, lag + 1)])


def _check_lag(n: int, lag: int) -> None:
    if lag < 1:
        raise ValidationError(f"lag must be >= 1, got {lag}")
    if n <= lag + 1:
        raise InsufficientDataError(f"series length {n} must exceed lag + 1 = {lag + 1}")


def ljung_box(series, lag: int = DEFAULT_LAG) -> TestResult:
    """Ljung-Box Q with a chi-square(lag) p-value. Square the input first for Q^2."""
    x = _as_array(series)
    n = len(x)
    _check_lag(n, lag)
    rho = autocorrelations(x, lag)
    j = np.arange(1, lag + 1)
    q = n * (n + 2) * float(np.sum(rho**2 / (n - j)))
    return TestResult(q, float(chi2_sf(q, lag)))


def arch_lm(series, lag: int = DEFAULT_LAG) -> TestResult:
    """Engle's LM test: regress e_t^2 on a constant and ``lag`` of its own lags.

    The statistic is ``(n - lag) * R^2``.
    """
    x = _as_array(series)
    n = len(x)
    _check_lag(n, lag)
    e2 = (x - x.mean()) ** 2
    y = e2[lag:]
    if np.ptp(e2) == 0:
        raise DegenerateInputError("ARCH-LM regression is singular for a constant series")
    lags = np.column_stack([e2[lag - j:n - j] for j in range(1, lag + 1)])
    design = np.column_stack([np.ones(len(y)), lags])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DegenerateInputError("ARCH-LM regression is singular")
    resid = y - design @ coef
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else 0.0
    stat = max(len(y) * r2, 0.0)
    return TestResult(stat, float(chi2_sf(stat, lag)))


def dependence_report(series, lag: int = DEFAULT_LAG) -> DependenceReport:
    x = _as_array(series)
    return DependenceReport(
        ljung_box_returns=ljung_box(x, lag),
        ljung_box_squared=ljung_box(x**2, lag),
        arch_lm=arch_lm(x, lag),
        lag=lag,
    )


def synthetic_prices(returns: Iterable[float], start_price: float = 1000.0,
                     start: str = "2000-01-03") -> PriceSeries:
    """Invert percent log returns into a weekday-dated price path."""
    r = np.asarray(list(returns), dtype=float)
    logp = np.log(start_price) + np.concatenate([[0.0], np.cumsum(r) / 100.0])
    dates = np.busday_offset(np.datetime64(start, "D"), np.arange(len(logp)), roll="forward")
    return PriceSeries(dates.astype("datetime64[D]"), np.exp(logp))


def write_prices_csv(prices: PriceSeries, path, date_column: str = "date",
                     price_column: str = "close") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column, price_column])
        for d, p in zip(prices.dates, prices.prices):
            w.writerow([str(d), repr(float(p))])

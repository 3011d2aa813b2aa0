"""Parametric bootstrap of conditional risk measures.

With ``sigma_t`` known from the previous day, the only randomness in a
simulated measure ``-mu + sigma_t * M(0,1)`` comes from the conditional mean.
Each replication draws a mean, so the standard error of every measure equals
the standard deviation of the drawn means, and VaR, ES and SRM reports built
from the same stream share it exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distributions import norm_ppf
from .errors import ValidationError
from .garch import Forecast, RollingForecasts
from .riskmeasures import RiskSpec, StandardNormalMeasure, scale_measure, standard_measure

CALIBRATIONS = ("half_sigma", "literal_appendix1")
CI_METHODS = ("percentile", "normal_approx")

PRECISION_COLUMNS = ["measure", "estimate", "se", "st_se", "ci_lb", "ci_ub", "st_ci_lb", "st_ci_ub"]


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap settings.

    ``initial_mu_variance`` is the arbitrary starting variance of the
    ``literal_appendix1`` calibration; ``None`` means ``sigma_t**2``.
    """

    replications: int = 10000
    seed: int = 0
    calibration: str = "half_sigma"
    ci_method: str = "percentile"
    ci_level: float = 0.90
    initial_mu_variance: float | None = None

    def __post_init__(self) -> None:
        if self.replications < 100:
            raise ValidationError(f"replications must be >= 100, got {self.replications}")
        if self.calibration not in CALIBRATIONS:
            raise ValidationError(f"calibration must be one of {CALIBRATIONS}")
        if self.ci_method not in CI_METHODS:
            raise ValidationError(f"ci_method must be one of {CI_METHODS}")
        if not 0 < self.ci_level < 1:
            raise ValidationError("ci_level must lie in (0, 1)")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


@dataclass(frozen=True)
class PrecisionReport:
    measure: str
    estimate: float
    se: float
    st_se: float
    ci: tuple[float, float]
    st_ci: tuple[float, float]
    replications: int

    def as_row(self) -> dict:
        return {"measure": self.measure, "estimate": self.estimate, "se": self.se,
                "st_se": self.st_se, "ci_lb": self.ci[0], "ci_ub": self.ci[1],
                "st_ci_lb": self.st_ci[0], "st_ci_ub": self.st_ci[1]}


@dataclass(frozen=True)
class PrecisionRow:
    date: np.datetime64 | None
    mu: float
    sigma: float
    report: PrecisionReport


def replication_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; ``stream`` separates days, never measures."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


def calibrate_mu_sd(forecast: Forecast, strategy: str = "half_sigma", *,
                    rng: np.random.Generator | None = None, replications: int = 10000,
                    initial_variance: float | None = None) -> float:
    """Standard deviation of the simulated conditional mean.

    ``half_sigma`` returns ``sigma_t / 2``. ``literal_appendix1`` starts
    from an arbitrary mean variance ``v0``, simulates returns
    ``mu + sigma_t * eps``, measures their standard deviation ``s*`` and
    returns ``sqrt(v0 * sigma_t / s*)`` after a single pass.
    """
    sigma = float(forecast.sigma)
    if strategy == "half_sigma":
        return 0.5 * sigma
    if strategy != "literal_appendix1":
        raise ValidationError(f"unknown calibration {strategy!r}")
    rng = rng or replication_rng(0)
    v0 = sigma * sigma if initial_variance is None else float(initial_variance)
    mu = math.sqrt(v0) * rng.standard_normal(replications)
    r = mu + sigma * rng.standard_normal(replications)
    s_star = float(np.std(r, ddof=1))
    return math.sqrt(v0 * sigma / s_star)


def _draw_means(forecast: Forecast, config: BootstrapConfig, stream: int) -> np.ndarray:
    rng = replication_rng(config.seed, stream)
    z = rng.standard_normal(config.replications)
    if config.calibration == "half_sigma":
        sd = calibrate_mu_sd(forecast, "half_sigma")
    else:
        sd = calibrate_mu_sd(forecast, "literal_appendix1", rng=rng,
                             replications=config.replications,
                             initial_variance=config.initial_mu_variance)
    return forecast.mu + sd * z


def _report(std: StandardNormalMeasure, forecast: Forecast, means: np.ndarray,
            config: BootstrapConfig) -> PrecisionReport:
    estimate = float(scale_measure(std, forecast))
    sims = -means + forecast.sigma * std.value
    se = float(np.std(means, ddof=1))
    tail = 0.5 * (1.0 - config.ci_level)
    if config.ci_method == "percentile":
        lo, hi = (float(v) for v in np.quantile(sims, [tail, 1.0 - tail]))
    else:
        half = float(norm_ppf(1.0 - tail)) * se
        lo, hi = estimate - half, estimate + half
    if estimate != 0:
        st_se, st_ci = se / estimate, (lo / estimate, hi / estimate)
    else:
        st_se, st_ci = math.inf, (-math.inf, math.inf)
    return PrecisionReport(std.spec.name, estimate, se, st_se, (lo, hi), st_ci,
                           config.replications)


def bootstrap_measure(std: StandardNormalMeasure, forecast: Forecast,
                      config: BootstrapConfig | None = None, stream: int = 0) -> PrecisionReport:
    """Standard error and confidence interval of one conditional measure.

    ``std`` is computed once by the caller; replications only shift it by
    the drawn means.
    """
    config = config or BootstrapConfig()
    return _report(std, forecast, _draw_means(forecast, config, stream), config)


def average_forecast(rolling: RollingForecasts | Sequence[Forecast]) -> Forecast:
    """Period-average ``(mu, sigma)`` as a single forecast."""
    fcs = rolling.forecasts if isinstance(rolling, RollingForecasts) else tuple(rolling)
    if not fcs:
        raise ValidationError("no forecasts to average")
    return Forecast(None, float(np.mean([f.mu for f in fcs])),
                    float(np.mean([f.sigma for f in fcs])))


def precision_table(forecasts: Forecast | RollingForecasts | Iterable[Forecast],
                    specs: Sequence[RiskSpec], config: BootstrapConfig | None = None
                    ) -> list[PrecisionRow]:
    """One report per (forecast, spec).

    Standard measures are evaluated once per spec. Forecast ``i`` uses seed
    stream ``i`` for every spec, so the SE column is identical across specs.
    """
    config = config or BootstrapConfig()
    if isinstance(forecasts, Forecast):
        fcs: tuple[Forecast, ...] = (forecasts,)
    elif isinstance(forecasts, RollingForecasts):
        fcs = forecasts.forecasts
    else:
        fcs = tuple(forecasts)
    if not fcs or not specs:
        raise ValidationError("precision_table needs at least one forecast and one spec")
    stds = [standard_measure(s) for s in specs]
    rows = []
    for i, fc in enumerate(fcs):
        means = _draw_means(fc, config, i)
        for std in stds:
            rows.append(PrecisionRow(fc.date, fc.mu, fc.sigma, _report(std, fc, means, config)))
    return rows


def ratio_rows(reports: Sequence[PrecisionReport], base: PrecisionReport) -> list[dict]:
    """Each report's columns divided by the matching columns of ``base``."""
    out = []
    b = base.as_row()
    for rep in reports:
        row = rep.as_row()
        out.append({"measure": f"{rep.measure}/{base.measure}",
                    **{k: row[k] / b[k] for k in PRECISION_COLUMNS[1:]}})
    return out


def write_precision_csv(reports: Sequence[PrecisionReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=PRECISION_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rep in reports:
            w.writerow({k: (repr(v) if isinstance(v, float) else v)
                        for k, v in rep.as_row().items()})

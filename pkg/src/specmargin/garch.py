"""AR(1)-GARCH(1,1) estimation, one-step forecasts and daily rolling refits.

Model, with returns ``r_t`` in percent::

    r_t      = mu_t + eps_t,          mu_t = rho * r_{t-1}
    sigma2_t = omega + alpha * x_{t-1}**2 + beta * sigma2_{t-1}

By default ``x`` is the lagged *return* (``variance_input="returns"``);
``variance_input="residuals"`` feeds the lagged innovation ``eps`` instead,
which is the textbook GARCH(1,1). ``mu_1 = 0`` and ``sigma2_1`` is the sample
variance of the estimation window.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, signal
from scipy.special import expit, logit

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    InsufficientDataError,
    SpecMarginError,
    ValidationError,
)
from .timeseries import ReturnSeries

logger = logging.getLogger(__name__)

VARIANCE_INPUTS = ("returns", "residuals")
WINDOW_MODES = ("fixed", "expanding")

_LOG_2PI = math.log(2.0 * math.pi)
# alpha + beta never reaches 1 - 1e-6, even when the logistic saturates.
_MAX_PERSISTENCE = 1.0 - 2e-6
_MAX_RHO = 1.0 - 1e-9


@dataclass(frozen=True)
class GarchParams:
    rho: float
    omega: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise ValidationError(f"non-finite GARCH parameter in {self}")
        if abs(self.rho) >= 1:
            raise ValidationError(f"|rho| must be < 1, got {self.rho}")
        if self.omega < 0 or self.alpha < 0 or self.beta < 0:
            raise ValidationError(f"omega, alpha, beta must be >= 0: {self}")
        if self.alpha + self.beta >= 1:
            raise ValidationError(f"alpha + beta must be < 1: {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.rho, self.omega, self.alpha, self.beta)

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


@dataclass(frozen=True)
class FitOptions:
    variance_input: str = "returns"
    min_obs: int = 100
    max_iter: int = 500
    ftol: float = 1e-8
    xtol: float = 1e-7

    def __post_init__(self) -> None:
        if self.variance_input not in VARIANCE_INPUTS:
            raise ValidationError(f"variance_input must be one of {VARIANCE_INPUTS}")
        if self.min_obs < 2:
            raise ValidationError("min_obs must be >= 2")


@dataclass(frozen=True, eq=False)
class GarchFit:
    params: GarchParams
    log_likelihood: float
    sigma_path: np.ndarray
    mu_path: np.ndarray
    residuals: np.ndarray
    std_residuals: np.ndarray
    window: tuple
    converged: bool
    n_iter: int
    init_variance: float
    variance_input: str = "returns"
    start_log_likelihood: float = float("nan")
    method: str = ""

    @property
    def n(self) -> int:
        return len(self.sigma_path)

    @property
    def aic(self) -> float:
        return 2 * 4 - 2 * self.log_likelihood

    @property
    def bic(self) -> float:
        return 4 * math.log(self.n) - 2 * self.log_likelihood


@dataclass(frozen=True)
class Forecast:
    date: np.datetime64 | None
    mu: float
    sigma: float
    source_params: GarchParams | None = None

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValidationError(f"forecast sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class DayDiagnostic:
    date: np.datetime64
    refit: bool
    converged: bool
    log_likelihood: float
    message: str = ""


@dataclass(frozen=True, eq=False)
class RollingForecasts:
    forecasts: tuple[Forecast, ...]
    refit_params: tuple[GarchParams, ...]
    diagnostics: tuple[DayDiagnostic, ...]

    def __len__(self) -> int:
        return len(self.forecasts)

    @property
    def dates(self) -> np.ndarray:
        return np.array([f.date for f in self.forecasts], dtype="datetime64[D]")

    @property
    def mu(self) -> np.ndarray:
        return np.array([f.mu for f in self.forecasts])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([f.sigma for f in self.forecasts])

    @property
    def n_failed(self) -> int:
        return sum(not d.converged for d in self.diagnostics)

    def mean_params(self) -> GarchParams:
        arr = np.array([p.as_tuple() for p in self.refit_params])
        return GarchParams(*map(float, arr.mean(axis=0)))


def _values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return np.asarray(returns.values, dtype=float)
    return np.asarray(returns, dtype=float)


def filter_paths(r: np.ndarray, params: GarchParams | Sequence[float], init_variance: float,
                 variance_input: str = "returns") -> tuple[np.ndarray, np.ndarray]:
    """Conditional means and variances ``(mu, sigma2)`` implied by ``params``."""
    rho, omega, alpha, beta = params.as_tuple() if isinstance(params, GarchParams) else params
    mu = np.empty_like(r)
    mu[0] = 0.0
    mu[1:] = rho * r[:-1]
    shock = r if variance_input == "returns" else r - mu
    sigma2 = np.empty_like(r)
    sigma2[0] = init_variance
    if len(r) > 1:
        drive = omega + alpha * shock[:-1] ** 2
        sigma2[1:], _ = signal.lfilter([1.0], [1.0, -beta], drive, zi=[beta * init_variance])
    return mu, sigma2


def _loglik(r, params, init_variance, variance_input) -> float:
    mu, sigma2 = filter_paths(r, params, init_variance, variance_input)
    if not np.all(sigma2 > 0):
        return -np.inf
    eps = r - mu
    return -0.5 * float(np.sum(_LOG_2PI + np.log(sigma2) + eps * eps / sigma2))


def log_likelihood(returns, params: GarchParams, init_variance: float,
                   variance_input: str = "returns") -> float:
    """Gaussian conditional log-likelihood of the whole window."""
    if not init_variance > 0:
        raise ValidationError("init_variance must be > 0")
    r = _values(returns)
    mu, sigma2 = filter_paths(r, params, init_variance, variance_input)
    if not np.all(sigma2 > 0):
        raise DegenerateInputError("conditional variance hit zero (omega = alpha = beta = 0?)")
    eps = r - mu
    return -0.5 * float(np.sum(_LOG_2PI + np.log(sigma2) + eps * eps / sigma2))


# Unconstrained coordinates: (atanh rho, log omega, logit persistence, logit alpha-share).

def to_unconstrained(p: GarchParams) -> np.ndarray:
    pers = min(max(p.alpha + p.beta, 1e-8), _MAX_PERSISTENCE * (1 - 1e-9))
    share = min(max(p.alpha / pers, 1e-8), 1 - 1e-8) if pers > 0 else 0.5
    return np.array([
        math.atanh(max(min(p.rho, 0.999999), -0.999999)),
        math.log(max(p.omega, 1e-12)),
        float(logit(pers / _MAX_PERSISTENCE)),
        float(logit(share)),
    ])


def from_unconstrained(theta: np.ndarray) -> tuple[float, float, float, float]:
    rho = _MAX_RHO * math.tanh(theta[0])
    omega = math.exp(min(theta[1], 700.0))
    pers = _MAX_PERSISTENCE * float(expit(theta[2]))
    alpha = pers * float(expit(theta[3]))
    beta = pers - alpha
    return rho, omega, alpha, max(beta, 0.0)


def default_start(r: np.ndarray) -> GarchParams:
    return GarchParams(0.0, 0.1 * float(np.var(r)), 0.05, 0.90)


def _build_fit(r, params, ll, init_variance, options, window, converged, n_iter,
               start_ll, method) -> GarchFit:
    mu, sigma2 = filter_paths(r, params, init_variance, options.variance_input)
    sigma = np.sqrt(sigma2)
    eps = r - mu
    return GarchFit(params=params, log_likelihood=ll, sigma_path=sigma, mu_path=mu,
                    residuals=eps, std_residuals=eps / sigma, window=window,
                    converged=converged, n_iter=n_iter, init_variance=init_variance,
                    variance_input=options.variance_input, start_log_likelihood=start_ll,
                    method=method)


def fit(returns, options: FitOptions | None = None, start: GarchParams | None = None) -> GarchFit:
    """Maximum-likelihood fit of the AR(1)-GARCH(1,1) model.

    Parameters
    ----------
    returns : ReturnSeries or array_like
        Estimation window, percent returns.
    options : FitOptions, optional
    start : GarchParams, optional
        Starting values (warm start). Defaults to ``rho=0``,
        ``omega=0.1*var``, ``alpha=0.05``, ``beta=0.90``.

    Returns
    -------
    GarchFit

    Raises
    ------
    InsufficientDataError
        Fewer than ``options.min_obs`` returns.
    DegenerateInputError
        The window has zero variance.
    ConvergenceError
        Iteration limit reached; ``err.fit`` holds the best fit found.
    """
    options = options or FitOptions()
    r = _values(returns)
    n = len(r)
    if n < options.min_obs:
        raise InsufficientDataError(f"fit needs at least {options.min_obs} returns, got {n}")
    if not np.all(np.isfinite(r)):
        raise ValidationError("returns contain NaN or inf")
    init_variance = float(np.var(r))
    if not init_variance > 1e-12 * max(1.0, float(np.mean(r * r))):
        raise DegenerateInputError("returns have no variation; the model is not identified")
    if isinstance(returns, ReturnSeries) and n:
        window = (returns.dates[0], returns.dates[-1])
    else:
        window = (0, n - 1)

    start = start or default_start(r)
    vi = options.variance_input
    theta0 = to_unconstrained(start)
    start_ll = _loglik(r, start, init_variance, vi)
    scale = 1.0 / n

    def objective(theta):
        ll = _loglik(r, from_unconstrained(theta), init_variance, vi)
        return -ll * scale if np.isfinite(ll) else 1e10

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = optimize.minimize(objective, theta0, method="BFGS",
                                options={"maxiter": options.max_iter, "gtol": 1e-7})
        best_x, best_f = res.x, res.fun
        n_iter = int(res.nit)
        method = "bfgs"
        converged = bool(res.success)
        if not converged:
            # BFGS stalls on numerical gradients near the optimum; polish with a simplex
            # using the ftol/xtol stopping rule.
            nm = optimize.minimize(objective, best_x, method="Nelder-Mead",
                                   options={"maxiter": options.max_iter,
                                            "xatol": options.xtol,
                                            "fatol": options.ftol * scale,
                                            "initial_simplex": _simplex(best_x)})
            n_iter += int(nm.nit)
            method = "bfgs+nelder-mead"
            if nm.fun <= best_f:
                best_x, best_f = nm.x, nm.fun
            converged = bool(nm.success)

    params = GarchParams(*from_unconstrained(best_x))
    ll = _loglik(r, params, init_variance, vi)
    if np.isfinite(start_ll) and ll < start_ll:
        params, ll = start, start_ll
    result = _build_fit(r, params, ll, init_variance, options, window, converged, n_iter,
                        start_ll, method)
    if not converged:
        raise ConvergenceError(f"no convergence after {n_iter} iterations", fit=result)
    return result


def _simplex(x: np.ndarray, step: float = 0.05) -> np.ndarray:
    pts = [x]
    for i in range(len(x)):
        y = x.copy()
        y[i] += step
        pts.append(y)
    return np.array(pts)


def refilter(fit_: GarchFit, returns, params: GarchParams | None = None) -> GarchFit:
    """Re-run the variance recursion of ``fit_`` (or ``params``) on another window."""
    r = _values(returns)
    params = params or fit_.params
    init_variance = float(np.var(r))
    opts = FitOptions(variance_input=fit_.variance_input, min_obs=2)
    ll = _loglik(r, params, init_variance, fit_.variance_input)
    if isinstance(returns, ReturnSeries):
        window = (returns.dates[0], returns.dates[-1])
    else:
        window = (0, len(r) - 1)
    return _build_fit(r, params, ll, init_variance, opts, window, fit_.converged, 0,
                      ll, "refilter")


def forecast_next(fit_: GarchFit, last_return: float, date=None) -> Forecast:
    """One-step-ahead ``(mu, sigma)`` from the end of the fitted window."""
    p = fit_.params
    mu = p.rho * last_return
    if fit_.variance_input == "returns":
        shock = last_return
    else:
        shock = last_return - fit_.mu_path[-1]
    sigma_last = fit_.sigma_path[-1]
    sigma = math.sqrt(p.omega + p.alpha * shock * shock + p.beta * sigma_last * sigma_last)
    return Forecast(date=date, mu=mu, sigma=sigma, source_params=p)


def rolling_forecasts(returns: ReturnSeries, init_window: int, refit_every: int = 1, *,
                      window_mode: str = "fixed", warm_start: bool = True,
                      strict: bool = False, options: FitOptions | None = None,
                      start_index: int | None = None) -> RollingForecasts:
    """Refit on a trailing window each out-of-sample day and forecast that day.

    Day ``t`` (``t >= start_index``, default ``init_window``) uses returns
    ``t - init_window .. t - 1`` (or ``0 .. t - 1`` when expanding). Fit
    failures are logged in ``diagnostics`` and the best-so-far or previous
    parameters are used instead, unless ``strict``.
    """
    if window_mode not in WINDOW_MODES:
        raise ValidationError(f"window_mode must be one of {WINDOW_MODES}")
    if refit_every < 1:
        raise ValidationError("refit_every must be >= 1")
    options = options or FitOptions()
    n = returns.n
    first = init_window if start_index is None else start_index
    if init_window < 1 or first < init_window or first + 1 > n:
        raise InsufficientDataError(
            f"need init_window + 1 <= n (init_window={init_window}, start={first}, n={n})")
    r = returns.values

    forecasts: list[Forecast] = []
    refits: list[GarchParams] = []
    diags: list[DayDiagnostic] = []
    current: GarchFit | None = None
    for k, t in enumerate(range(first, n)):
        lo = 0 if window_mode == "expanding" else t - init_window
        window = returns.slice(lo, t)
        refit = current is None or k % refit_every == 0
        message = ""
        converged = True
        if refit:
            start = current.params if (warm_start and current is not None) else None
            try:
                current = fit(window, options, start=start)
            except ConvergenceError as err:
                if strict:
                    raise
                current, converged, message = err.fit, False, str(err)
            except SpecMarginError as err:
                if strict or current is None:
                    raise
                current = refilter(current, window)
                converged, message = False, f"{type(err).__name__}: {err}; kept previous params"
        else:
            current = refilter(current, window)
        fc = forecast_next(current, float(r[t - 1]), date=returns.dates[t])
        forecasts.append(fc)
        refits.append(current.params)
        diags.append(DayDiagnostic(returns.dates[t], refit, converged,
                                   current.log_likelihood, message))
        if message:
            logger.warning("%s: %s", returns.dates[t], message)
    return RollingForecasts(tuple(forecasts), tuple(refits), tuple(diags))


def simulate(params: GarchParams, n: int, seed: int | np.random.Generator | None = None,
             variance_input: str = "returns", burn: int = 500) -> np.ndarray:
    """Draw ``n`` percent returns from the model after a burn-in."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = n + burn
    z = rng.standard_normal(total)
    rho, omega, alpha, beta = params.as_tuple()
    denom = 1.0 - alpha - beta
    s2 = omega / denom if denom > 0 and omega > 0 else max(omega, 1.0)
    r = np.empty(total)
    prev_r = 0.0
    for t in range(total):
        mu = rho * prev_r
        r[t] = mu + math.sqrt(s2) * z[t]
        shock = r[t] if variance_input == "returns" else r[t] - mu
        s2 = omega + alpha * shock * shock + beta * s2
        prev_r = r[t]
    return r[burn:]


# --- export -----------------------------------------------------------------

FORECAST_COLUMNS = ["date", "rho", "omega", "alpha", "beta", "loglik", "mu", "sigma"]


def forecast_rows(rolling: RollingForecasts) -> list[dict]:
    rows = []
    for fc, p, d in zip(rolling.forecasts, rolling.refit_params, rolling.diagnostics):
        rows.append({"date": str(fc.date), "rho": p.rho, "omega": p.omega, "alpha": p.alpha,
                     "beta": p.beta, "loglik": d.log_likelihood, "mu": fc.mu, "sigma": fc.sigma,
                     "converged": d.converged, "refit": d.refit, "message": d.message})
    return rows


def write_forecasts_csv(rolling: RollingForecasts, path, extra_columns: bool = False) -> None:
    cols = FORECAST_COLUMNS + (["converged", "refit", "message"] if extra_columns else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in forecast_rows(rolling):
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_forecasts_csv(path) -> RollingForecasts:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: no forecast rows")
    missing = [c for c in FORECAST_COLUMNS if c not in rows[0]]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")
    fcs, ps, ds = [], [], []
    for row in rows:
        p = GarchParams(float(row["rho"]), float(row["omega"]), float(row["alpha"]),
                        float(row["beta"]))
        d = np.datetime64(row["date"], "D")
        fcs.append(Forecast(d, float(row["mu"]), float(row["sigma"]), p))
        ps.append(p)
        conv = row.get("converged", "True") in ("True", "true", "1")
        ds.append(DayDiagnostic(d, row.get("refit", "True") in ("True", "true", "1"), conv,
                                float(row["loglik"]), row.get("message", "")))
    return RollingForecasts(tuple(fcs), tuple(ps), tuple(ds))


def forecasts_to_json(rolling: RollingForecasts) -> list[dict]:
    return forecast_rows(rolling)


def fit_summary(fit_: GarchFit) -> dict:
    return {
        "params": asdict(fit_.params),
        "log_likelihood": fit_.log_likelihood,
        "aic": fit_.aic,
        "bic": fit_.bic,
        "n": fit_.n,
        "converged": fit_.converged,
        "iterations": fit_.n_iter,
        "variance_input": fit_.variance_input,
        "window": [str(w) for w in fit_.window],
    }

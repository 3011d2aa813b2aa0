"""Conditional VaR, Expected Shortfall and spectral risk measures for futures margins."""

# backtest() is left in its module so it does not shadow the submodule name
from .backtest import BacktestReport, count_exceedances, kupiec_test, pit, residual_tests
from .bootstrap import BootstrapConfig, PrecisionReport, bootstrap_measure, calibrate_mu_sd, precision_table
from .errors import (
    AlignmentError,
    ConvergenceError,
    DegenerateInputError,
    InsufficientDataError,
    ParseError,
    SpecMarginError,
    ValidationError,
)
from .garch import FitOptions, Forecast, GarchFit, GarchParams, RollingForecasts, fit, forecast_next, rolling_forecasts
from .quadrature import QuadratureSpec, integrate
from .riskmeasures import (
    ES,
    Spectral,
    StandardNormalMeasure,
    VaR,
    scale_measure,
    spectral_weight,
    std_normal_es,
    std_normal_srm,
    std_normal_var,
)
from .timeseries import PriceSeries, ReturnSeries, arch_lm, ljung_box, load_prices, log_returns, summarize

__version__ = "0.1.0"

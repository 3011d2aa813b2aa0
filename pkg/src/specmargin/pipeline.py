"""End-to-end margin pipeline: ingest, fit, roll, measure, bootstrap, backtest."""

from __future__ import annotations

import csv
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import backtest as bt
from . import garch
from .bootstrap import (
    BootstrapConfig,
    average_forecast,
    precision_table,
    ratio_rows,
    write_precision_csv,
)
from .errors import SpecMarginError, ValidationError
from .quadrature import METHODS, QuadratureSpec, integrate
from .riskmeasures import (
    ES,
    RiskSpec,
    VaR,
    check_risk_aversion,
    scale_measure,
    spec_from_dict,
    srm_integrand,
    standard_measure,
    table1,
)
from .timeseries import (
    ReturnSeries,
    dependence_report,
    load_prices,
    log_returns,
    summarize,
    write_returns_csv,
)

logger = logging.getLogger(__name__)

ENV_PREFIX = "SPECMARGIN_"

DEFAULT_RISK_SPECS = (
    {"type": "var", "alpha": 0.95},
    {"type": "es", "alpha": 0.95},
    {"type": "srm", "k": 50.0, "quadrature": {"method": "trapezoid", "n": 30000}},
)


@dataclass
class InputFile:
    name: str
    path: str


@dataclass
class ColumnSpec:
    date: str = "date"
    price: str = "close"


@dataclass
class SplitConfig:
    window: int = 523
    evaluation_start: str | None = None


@dataclass
class GarchSettings:
    variance_input: str = "returns"
    window_mode: str = "fixed"
    refit_every: int = 1
    warm_start: bool = True
    min_obs: int = 100
    max_iter: int = 500

    def fit_options(self) -> garch.FitOptions:
        return garch.FitOptions(variance_input=self.variance_input, min_obs=self.min_obs,
                                max_iter=self.max_iter)


@dataclass
class BootstrapSettings:
    replications: int = 10000
    calibration: str = "half_sigma"
    ci_method: str = "percentile"
    ci_level: float = 0.90
    per_day: bool = True


@dataclass
class BacktestSettings:
    alpha: float = 0.95
    kupiec_variant: str = bt.DEFAULT_KUPIEC_VARIANT


@dataclass
class ConvergenceSettings:
    k: float = 50.0
    n_min: int = 100
    n_max: int = 50000
    step: int = 100
    methods: list = field(default_factory=lambda: ["trapezoid", "simpson", "niederreiter",
                                                   "weyl", "pseudo_mc"])
    seeds: int = 20


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    columns: ColumnSpec = field(default_factory=ColumnSpec)
    split: SplitConfig = field(default_factory=SplitConfig)
    risk_specs: list = field(default_factory=lambda: [dict(d) for d in DEFAULT_RISK_SPECS])
    garch: GarchSettings = field(default_factory=GarchSettings)
    bootstrap: BootstrapSettings = field(default_factory=BootstrapSettings)
    backtest: BacktestSettings = field(default_factory=BacktestSettings)
    output_dir: str = "out"
    seed: int = 0
    strict: bool = False
    lag: int = 12
    table1: bool = True
    convergence: bool = False
    convergence_settings: ConvergenceSettings = field(default_factory=ConvergenceSettings)

    _nested = {"columns": ColumnSpec, "split": SplitConfig, "garch": GarchSettings,
               "bootstrap": BootstrapSettings, "backtest": BacktestSettings,
               "convergence_settings": ConvergenceSettings}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for key, value in d.items():
            if key in cls._nested:
                sub = cls._nested[key]
                sub_known = {f.name for f in fields(sub)}
                bad = set(value) - sub_known
                if bad:
                    raise ValidationError(f"unknown keys in {key!r}: {sorted(bad)}")
                kwargs[key] = sub(**value)
            elif key == "inputs":
                try:
                    kwargs[key] = [InputFile(**i) if isinstance(i, dict) else InputFile(*i)
                                   for i in value]
                except TypeError as exc:
                    raise ValidationError(f"bad input entry: {exc}") from None
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
        cfg = cls.from_dict(data)
        base = Path(path).parent
        for inp in cfg.inputs:
            if not os.path.isabs(inp.path):
                inp.path = str(base / inp.path)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def specs(self) -> list[RiskSpec]:
        return [spec_from_dict(d) for d in self.risk_specs]

    def bootstrap_config(self) -> BootstrapConfig:
        b = self.bootstrap
        return BootstrapConfig(replications=b.replications, seed=self.seed,
                               calibration=b.calibration, ci_method=b.ci_method,
                               ci_level=b.ci_level)

    def validate(self, require_inputs: bool = True) -> None:
        if not self.risk_specs:
            raise ValidationError("at least one risk spec is required")
        self.specs()
        self.bootstrap_config()
        self.garch.fit_options()
        if self.split.window < self.garch.min_obs:
            raise ValidationError(
                f"estimation window {self.split.window} is below the minimum fit size "
                f"{self.garch.min_obs}")
        if self.garch.window_mode not in garch.WINDOW_MODES:
            raise ValidationError(f"window_mode must be one of {garch.WINDOW_MODES}")
        if self.backtest.kupiec_variant not in bt.KUPIEC_VARIANTS:
            raise ValidationError(f"kupiec_variant must be one of {bt.KUPIEC_VARIANTS}")
        if require_inputs and not self.inputs:
            raise ValidationError("config lists no input files")
        names = [i.name for i in self.inputs]
        if len(set(names)) != len(names):
            raise ValidationError("input names must be unique")

    def apply_env(self, environ: dict | None = None) -> "RunConfig":
        env = os.environ if environ is None else environ

        def integer(key):
            try:
                return int(env[ENV_PREFIX + key])
            except ValueError:
                raise ValidationError(f"{ENV_PREFIX}{key} must be an integer") from None

        if ENV_PREFIX + "SEED" in env:
            self.seed = integer("SEED")
        if ENV_PREFIX + "OUT" in env:
            self.output_dir = env[ENV_PREFIX + "OUT"]
        if ENV_PREFIX + "STRICT" in env:
            self.strict = env[ENV_PREFIX + "STRICT"].lower() in ("1", "true", "yes")
        if ENV_PREFIX + "WINDOW" in env:
            self.split.window = integer("WINDOW")
        if ENV_PREFIX + "REPLICATIONS" in env:
            self.bootstrap.replications = integer("REPLICATIONS")
        return self


def spec_slug(spec: RiskSpec) -> str:
    if isinstance(spec, VaR):
        return f"var_{spec.alpha:g}"
    if isinstance(spec, ES):
        return f"es_{spec.alpha:g}"
    return f"srm_k{spec.k:g}"


@dataclass(eq=False)
class ContractResult:
    name: str
    returns: ReturnSeries
    summary: Any
    dependence: Any
    initial_fit: garch.GarchFit
    rolling: garch.RollingForecasts
    specs: list
    risk_paths: dict
    daily_precision: list
    precision: list
    backtest: bt.BacktestReport
    pit: bt.PitSeries

    def table3(self, lag: int = 12) -> dict:
        """Mean refit parameters and pre/post-model dependence diagnostics."""
        mean = self.rolling.mean_params()
        z = self.initial_fit.std_residuals
        out = {
            "mean_params": asdict(mean),
            "initial_fit": garch.fit_summary(self.initial_fit),
            "returns_diagnostics": self.dependence.as_dict(),
            "std_residual_diagnostics": dependence_report(z, lag).as_dict(),
            "failed_refits": self.rolling.n_failed,
        }
        s = summarize(z)
        out["std_residual_diagnostics"]["jarque_bera_p"] = bt.jarque_bera_test(
            s.skewness, s.kurtosis, len(z))
        return out


def evaluation_start_index(returns: ReturnSeries, split: SplitConfig) -> int:
    if split.evaluation_start is None:
        return split.window
    start = np.datetime64(split.evaluation_start, "D")
    idx = int(np.searchsorted(returns.dates, start))
    if idx < split.window:
        raise ValidationError(
            f"evaluation start {split.evaluation_start} leaves only {idx} returns before it; "
            f"window needs {split.window}")
    if idx >= returns.n:
        raise ValidationError(f"evaluation start {split.evaluation_start} is after the data")
    return idx


def analyze_returns(name: str, returns: ReturnSeries, config: RunConfig,
                    bootstrap_paths: bool | None = None) -> ContractResult:
    """Full in-memory pipeline for one contract."""
    specs = config.specs()
    g = config.garch
    start = evaluation_start_index(returns, config.split)
    window = config.split.window
    opts = g.fit_options()

    summary = summarize(returns)
    dependence = dependence_report(returns.values, config.lag)
    try:
        initial_fit = garch.fit(returns.slice(start - window, start), opts)
    except garch.ConvergenceError as err:
        if config.strict:
            raise
        initial_fit = err.fit
    rolling = garch.rolling_forecasts(returns, window, g.refit_every, window_mode=g.window_mode,
                                      warm_start=g.warm_start, strict=config.strict,
                                      options=opts, start_index=start)

    stds = [standard_measure(s) for s in specs]
    paths = {spec_slug(s): scale_measure(m, mu=rolling.mu, sigma=rolling.sigma)
             for s, m in zip(specs, stds)}
    bconf = config.bootstrap_config()
    per_day = config.bootstrap.per_day if bootstrap_paths is None else bootstrap_paths
    daily = precision_table(rolling, specs, bconf) if per_day else []
    precision = [row.report for row in precision_table(average_forecast(rolling), specs, bconf)]

    realized = returns.slice(start, returns.n)
    report = bt.backtest(realized, rolling, config.backtest.alpha, config.backtest.kupiec_variant)
    pits = bt.pit(realized, rolling)
    return ContractResult(name, returns, summary, dependence, initial_fit, rolling, specs, paths,
                          daily, precision, report, pits)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_risk_paths(result: ContractResult, path) -> None:
    slugs = [spec_slug(s) for s in result.specs]
    cols = ["date", "mu", "sigma"]
    for s in slugs:
        cols += [s, f"{s}_ci_lb", f"{s}_ci_ub"] if result.daily_precision else [s]
    bands: dict[tuple, tuple] = {}
    for row in result.daily_precision:
        bands[(str(row.date), row.report.measure)] = row.report.ci
    names = {spec_slug(s): s.name for s in result.specs}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i, fc in enumerate(result.rolling.forecasts):
            line = [str(fc.date), _fmt(fc.mu), _fmt(fc.sigma)]
            for s in slugs:
                line.append(_fmt(result.risk_paths[s][i]))
                if result.daily_precision:
                    lo, hi = bands[(str(fc.date), names[s])]
                    line += [_fmt(lo), _fmt(hi)]
            w.writerow(line)


def write_params_csv(rolling: garch.RollingForecasts, path) -> None:
    cols = ["date", "rho", "omega", "alpha", "beta", "loglik", "converged", "refit", "message"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in garch.forecast_rows(rolling):
            w.writerow({k: _fmt(v) for k, v in row.items()})


def _dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.datetime64):
        return str(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_contract(result: ContractResult, outdir: Path, lag: int = 12) -> dict:
    d = outdir / result.name
    d.mkdir(parents=True, exist_ok=True)
    files = {
        "returns": d / "returns.csv",
        "params": d / "params.csv",
        "forecasts": d / "forecasts.csv",
        "risk_paths": d / "risk_paths.csv",
        "precision": d / "precision.csv",
        "precision_ratios": d / "precision_ratios.csv",
        "backtest": d / "backtest.json",
        "pit": d / "pit.csv",
        "summary": d / "summary.json",
    }
    write_returns_csv(result.returns, files["returns"])
    write_params_csv(result.rolling, files["params"])
    garch.write_forecasts_csv(result.rolling, files["forecasts"])
    write_risk_paths(result, files["risk_paths"])
    write_precision_csv(result.precision, files["precision"])
    base = next((r for r, s in zip(result.precision, result.specs) if isinstance(s, VaR)),
                result.precision[0])
    ratios = ratio_rows(result.precision, base)
    with open(files["precision_ratios"], "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(ratios[0]), lineterminator="\n")
        w.writeheader()
        for row in ratios:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    _dump_json(result.backtest.as_dict(), files["backtest"])
    bt.write_pit_csv(result.pit, files["pit"])
    _dump_json({"summary_stats": result.summary.as_dict(),
                "dependence": result.dependence.as_dict(),
                "garch": result.table3(lag),
                "n_forecasts": len(result.rolling)}, files["summary"])
    return {k: str(v.relative_to(outdir)) for k, v in files.items()}


@contextmanager
def _writable(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh


def write_table1_csv(rows: list[dict], target) -> None:
    with _writable(target) as fh:
        w = csv.DictWriter(fh, fieldnames=["alpha", "var", "es", "ara", "srm"],
                           lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def srm_reference(k: float) -> float:
    """Adaptive-quadrature value of the standard-normal exponential SRM."""
    return integrate(srm_integrand(check_risk_aversion(k)), QuadratureSpec("adaptive"))


def convergence_study(k: float = 50.0, n_grid: Iterable[int] | None = None,
                      methods: Sequence[str] = ("trapezoid", "simpson", "niederreiter", "weyl",
                                                "pseudo_mc"),
                      seeds: Sequence[int] = tuple(range(20))) -> list[dict]:
    """Standard-normal SRM estimates against the slice count N.

    One row per (method, N, seed); deterministic and quasi-MC rules ignore
    seeds and get a single row with ``seed=None``.
    """
    k = check_risk_aversion(k)
    grid = list(range(100, 50001, 100) if n_grid is None else n_grid)
    if not grid or not methods:
        raise ValidationError("convergence study needs a nonempty N grid and method list")
    for m in methods:
        if m not in METHODS or m == "adaptive":
            raise ValidationError(f"unsupported convergence method {m!r}")
    ref = srm_reference(k)
    f = srm_integrand(k)
    rows = []
    for method in methods:
        for n in grid:
            if method == "simpson" and (n - 2) % 2:
                continue
            for seed in (seeds if method == "pseudo_mc" else (None,)):
                est = integrate(f, QuadratureSpec(method, n, seed))
                rows.append({"method": method, "n": n, "seed": seed, "estimate": est,
                             "error": est - ref})
    return rows


def write_convergence_csv(rows: list[dict], target) -> None:
    with _writable(target) as fh:
        w = csv.DictWriter(fh, fieldnames=["method", "n", "seed", "estimate", "error"],
                           lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else _fmt(v)) for k, v in row.items()})


@dataclass
class ReportBundle:
    output_dir: Path
    contracts: dict
    files: dict
    failures: dict
    manifest_path: Path

    @property
    def ok(self) -> bool:
        return not self.failures


def load_contract_returns(inp: InputFile, columns: ColumnSpec) -> ReturnSeries:
    prices = load_prices(inp.path, columns.date, columns.price)
    return log_returns(prices)


def run(config: RunConfig) -> ReportBundle:
    """Process every input file and write the report tree plus ``manifest.json``.

    A contract that fails at any stage is recorded under ``failures`` with
    the stage name; the other contracts still run.
    """
    config.validate()
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    contracts: dict[str, ContractResult] = {}
    files: dict[str, Any] = {}
    failures: dict[str, dict] = {}
    for inp in config.inputs:
        stage = "ingest"
        try:
            returns = load_contract_returns(inp, config.columns)
            stage = "analysis"
            result = analyze_returns(inp.name, returns, config)
            stage = "write"
            files[inp.name] = write_contract(result, outdir, config.lag)
            contracts[inp.name] = result
        except (SpecMarginError, OSError) as err:
            logger.error("%s failed at %s: %s", inp.name, stage, err)
            failures[inp.name] = {"stage": stage, "error": f"{type(err).__name__}: {err}"}
            if config.strict:
                raise
    if config.table1:
        write_table1_csv(table1(), outdir / "table1.csv")
        files["table1"] = "table1.csv"
    if config.convergence:
        cs = config.convergence_settings
        rows = convergence_study(cs.k, range(cs.n_min, cs.n_max + 1, cs.step), cs.methods,
                                 range(cs.seeds))
        write_convergence_csv(rows, outdir / "convergence.csv")
        files["convergence"] = "convergence.csv"
    _dump_json(config.to_dict(), outdir / "config.json")
    files["config"] = "config.json"
    manifest = {"files": files, "failures": failures,
                "contracts": sorted(contracts), "seed": config.seed}
    _dump_json(manifest, outdir / "manifest.json")
    return ReportBundle(outdir, contracts, files, failures, outdir / "manifest.json")

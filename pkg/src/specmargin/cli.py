"""Command line entry point: ``specmargin {run,table1,convergence,backtest-only}``.

Exit status is 0 on success, 1 for invalid input or configuration and 2
for runtime failures. ``SPECMARGIN_SEED``, ``SPECMARGIN_OUT``,
``SPECMARGIN_STRICT``, ``SPECMARGIN_WINDOW``, ``SPECMARGIN_REPLICATIONS`` and
``SPECMARGIN_CONFIG`` override the config file; explicit flags override
both.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import backtest as bt
from . import garch
from .errors import SpecMarginError, ValidationError
from .pipeline import (
    ENV_PREFIX,
    RunConfig,
    convergence_study,
    run,
    write_convergence_csv,
    write_table1_csv,
)
from .quadrature import QuadratureSpec
from .riskmeasures import table1
from .timeseries import load_prices, log_returns, read_returns_csv

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specmargin",
                                     description="Conditional VaR / ES / spectral margin engine")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline from a JSON config")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true", default=None,
                   help="abort on the first fit failure")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration and exit")

    p = sub.add_parser("table1", help="standard-normal VaR, ES and SRM table as CSV")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--method", default="trapezoid")
    p.add_argument("--n", type=int, default=30000)

    p = sub.add_parser("convergence", help="SRM quadrature estimates against N")
    p.add_argument("--k", type=float, default=50.0)
    p.add_argument("--n-min", type=int, default=100)
    p.add_argument("--n-max", type=int, default=50000)
    p.add_argument("--step", type=int, default=100)
    p.add_argument("--methods", default="trapezoid,simpson,niederreiter,weyl,pseudo_mc")
    p.add_argument("--seeds", type=int, default=20, help="pseudo-MC seeds 0..S-1")
    p.add_argument("--seed", type=_seed, default=0, help="first pseudo-MC seed")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("backtest-only", help="backtest an existing forecasts.csv")
    p.add_argument("--forecasts", required=True, help="forecasts.csv written by `run`")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--returns", help="returns.csv (date,return)")
    src.add_argument("--prices", help="price CSV (date,close)")
    p.add_argument("--date-column", default="date")
    p.add_argument("--price-column", default="close")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--kupiec-variant", default=bt.DEFAULT_KUPIEC_VARIANT,
                   choices=bt.KUPIEC_VARIANTS)
    p.add_argument("--out", help="directory for backtest.json and pit.csv (default: stdout)")
    return parser


def resolve_config(args, environ=None) -> RunConfig:
    env = os.environ if environ is None else environ
    path = args.config or env.get(ENV_PREFIX + "CONFIG")
    cfg = RunConfig.from_json(path) if path else RunConfig()
    cfg.apply_env(env)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    if args.strict:
        cfg.strict = True
    return cfg


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if args.print_config:
        json.dump(cfg.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    cfg.validate()
    bundle = run(cfg)
    for name, failure in bundle.failures.items():
        print(f"{name}: failed at {failure['stage']}: {failure['error']}", file=sys.stderr)
    print(f"wrote {bundle.manifest_path}")
    return EXIT_OK if bundle.ok else EXIT_RUNTIME


def cmd_table1(args) -> int:
    rows = table1(quad=QuadratureSpec(args.method, args.n))
    write_table1_csv(rows, args.out or sys.stdout)
    return EXIT_OK


def cmd_convergence(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = convergence_study(args.k, range(args.n_min, args.n_max + 1, args.step), methods,
                             range(args.seed, args.seed + args.seeds))
    write_convergence_csv(rows, args.out or sys.stdout)
    return EXIT_OK


def cmd_backtest(args) -> int:
    rolling = garch.read_forecasts_csv(args.forecasts)
    if args.returns:
        returns = read_returns_csv(args.returns)
    else:
        returns = log_returns(load_prices(args.prices, args.date_column, args.price_column))
    report = bt.backtest(returns, rolling, args.alpha, args.kupiec_variant)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "backtest.json", "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        bt.write_pit_csv(bt.pit(returns, rolling), out / "pit.csv")
    else:
        json.dump(report.as_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "table1": cmd_table1, "convergence": cmd_convergence,
            "backtest-only": cmd_backtest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SpecMarginError, OSError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

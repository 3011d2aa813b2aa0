import csv
import json

import numpy as np
import pytest

from specmargin import cli
from specmargin.errors import ValidationError
from specmargin.garch import GarchParams, simulate
from specmargin.pipeline import (
    RunConfig,
    analyze_returns,
    convergence_study,
    run,
    srm_reference,
)
from specmargin.timeseries import ReturnSeries, synthetic_prices, write_prices_csv

PARAMS = GarchParams(0.03, 0.05, 0.08, 0.88)


def _write_inputs(tmp, names=("idx",), n=782, seed=0):
    for i, name in enumerate(names):
        write_prices_csv(synthetic_prices(simulate(PARAMS, n, seed=seed + i)), tmp / f"{name}.csv")
    cfg = {"inputs": [{"name": nm, "path": f"{nm}.csv"} for nm in names],
           "output_dir": str(tmp / "out"), "bootstrap": {"replications": 2000}}
    path = tmp / "config.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = RunConfig.from_json(_write_inputs(tmp, ("one", "two")))
    return run(cfg)


def test_bundle_counts(bundle):
    assert bundle.ok
    res = bundle.contracts["one"]
    assert len(res.rolling) == 259
    assert all(len(v) == 259 for v in res.risk_paths.values())
    with open(bundle.output_dir / "one" / "risk_paths.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 259
    assert {"var_0.95", "es_0.95_ci_lb", "srm_k50_ci_ub"} <= set(rows[0])


def test_manifest_complete(bundle):
    manifest = json.loads(bundle.manifest_path.read_text())
    assert manifest["contracts"] == ["one", "two"] and manifest["failures"] == {}
    paths = [p for v in manifest["files"].values() for p in (v.values() if isinstance(v, dict) else [v])]
    for rel in paths:
        f = bundle.output_dir / rel
        assert f.exists()
        if f.suffix == ".json":
            json.loads(f.read_text())
        else:
            with open(f) as fh:
                assert len(list(csv.reader(fh))) > 1
    layout = {"returns.csv", "params.csv", "forecasts.csv", "risk_paths.csv", "precision.csv",
              "backtest.json"}
    assert layout <= {p.name for p in (bundle.output_dir / "one").iterdir()}


def test_es_var_ratio_on_paths(bundle):
    res = bundle.contracts["one"]
    mu, sigma = res.rolling.mu, res.rolling.sigma
    small = np.abs(mu) < 0.05 * sigma
    assert small.sum() > 50
    ratio = res.risk_paths["es_0.95"][small] / res.risk_paths["var_0.95"][small]
    assert np.all((ratio >= 1.20) & (ratio <= 1.31))


def test_precision_tables(bundle):
    res = bundle.contracts["two"]
    assert len({r.se for r in res.precision}) == 1
    assert len(res.daily_precision) == 259 * 3


def test_byte_identical_reruns(tmp_path):
    cfg_path = _write_inputs(tmp_path, n=560)
    outs = []
    for i in range(2):
        cfg = RunConfig.from_json(cfg_path)
        cfg.output_dir = str(tmp_path / f"out{i}")
        run(cfg)
        outs.append(tmp_path / f"out{i}")
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    assert len(files) > 5
    for rel in files:
        if rel.name == "config.json":
            continue  # records its own output directory
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


def test_zero_specs_rejected(tmp_path):
    cfg = RunConfig.from_json(_write_inputs(tmp_path))
    cfg.risk_specs = []
    with pytest.raises(ValidationError, match="risk spec"):
        run(cfg)
    assert not (tmp_path / "out").exists()


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError, match="unknown config keys"):
        RunConfig.from_dict({"windw": 3})
    with pytest.raises(ValidationError, match="unknown keys"):
        RunConfig.from_dict({"split": {"windw": 3}})
    with pytest.raises(ValidationError, match="minimum fit size"):
        RunConfig.from_dict({"inputs": [["a", "a.csv"]], "split": {"window": 50}}).validate()
    with pytest.raises(ValidationError, match="not found"):
        RunConfig.from_json(tmp_path / "missing.json")
    with pytest.raises(ValidationError, match="integer"):
        RunConfig().apply_env({"SPECMARGIN_SEED": "x"})


def test_config_roundtrip():
    cfg = RunConfig.from_dict({"seed": 5, "garch": {"window_mode": "expanding"}})
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg and again.specs() == cfg.specs()


def test_failure_is_recorded_per_contract(tmp_path):
    cfg_path = _write_inputs(tmp_path, ("good", "bad"), n=560)
    (tmp_path / "bad.csv").write_text("date,close\n2000-01-03,1\n2000-01-04,-2\n")
    bundle = run(RunConfig.from_json(cfg_path))
    assert not bundle.ok and "good" in bundle.contracts
    assert bundle.failures["bad"]["stage"] == "ingest"
    assert "row 2" in bundle.failures["bad"]["error"]


def test_analyze_in_memory_with_evaluation_start():
    r = simulate(PARAMS, 600, seed=3)
    rs = ReturnSeries.from_values(r)
    cfg = RunConfig.from_dict({"split": {"window": 300, "evaluation_start": str(rs.dates[550])},
                               "bootstrap": {"replications": 200, "per_day": False}})
    res = analyze_returns("x", rs, cfg)
    assert len(res.rolling) == 50 and res.rolling.dates[0] == rs.dates[550]
    assert res.backtest.n == 50


def test_convergence_study_rows():
    rows = convergence_study(50, [100, 30000], ["trapezoid", "pseudo_mc"], seeds=range(3))
    assert len(rows) == 2 + 6
    trap = [r for r in rows if r["method"] == "trapezoid"]
    assert trap[1]["estimate"] >= trap[0]["estimate"]
    assert trap[1]["error"] == pytest.approx(trap[1]["estimate"] - srm_reference(50))


@pytest.mark.xfail(strict=True, reason="the truncated grid drops about 0.0070 of the k=50 tail")
def test_trapezoid_30000_within_1e3_of_oracle():
    rows = convergence_study(50, [30000], ["trapezoid"], seeds=[0])
    assert abs(rows[0]["error"]) < 1e-3


@pytest.mark.xfail(strict=True, reason="pseudo-MC std at N=1000 is about 3x, not 10x, the trapezoid error")
def test_pseudo_mc_dispersion_at_1000():
    rows = convergence_study(50, [1000], ["trapezoid", "pseudo_mc"], seeds=range(20))
    trap = abs(rows[0]["error"])
    spread = np.std([r["estimate"] for r in rows[1:]], ddof=1)
    assert spread >= 10 * trap


@pytest.mark.parametrize("method", ["trapezoid", "simpson"])
def test_deterministic_converge_upwards(method):
    rows = convergence_study(50, [100, 50000], [method])
    assert rows[1]["estimate"] >= rows[0]["estimate"]


# --- CLI ---------------------------------------------------------------------------

def test_cli_table1(capsys):
    assert cli.main(["table1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "alpha,var,es,ara,srm" and len(lines) == 10


def test_cli_run_and_backtest_only(tmp_path, capsys):
    cfg = _write_inputs(tmp_path, n=540)
    out = tmp_path / "cli_out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    assert json.loads((out / "config.json").read_text())["seed"] == 3
    code = cli.main(["backtest-only", "--forecasts", str(out / "idx" / "forecasts.csv"),
                     "--returns", str(out / "idx" / "returns.csv")])
    assert code == 0
    text = capsys.readouterr().out
    report = json.loads(text[text.index("{"):])
    saved = json.loads((out / "idx" / "backtest.json").read_text())
    assert report == saved
    code = cli.main(["backtest-only", "--forecasts", str(out / "idx" / "forecasts.csv"),
                     "--prices", str(tmp_path / "idx.csv"), "--out", str(tmp_path / "bt")])
    assert code == 0
    assert json.loads((tmp_path / "bt" / "backtest.json").read_text()) == saved


def test_cli_print_config(capsys, monkeypatch):
    monkeypatch.setenv("SPECMARGIN_REPLICATIONS", "500")
    monkeypatch.setenv("SPECMARGIN_SEED", "8")
    assert cli.main(["run", "--print-config", "--seed", "9"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["bootstrap"]["replications"] == 500
    assert cfg["seed"] == 9  # flag beats environment
    assert cfg["risk_specs"][2]["quadrature"] == {"method": "trapezoid", "n": 30000}


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["run"]) == 1  # no inputs
    assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == 1
    assert cli.main(["table1", "--method", "simpson", "--n", "1001"]) == 1
    assert cli.main(["bogus"]) == 1
    assert cli.main(["run", "--seed", "-1"]) == 1
    cfg = _write_inputs(tmp_path, n=540)
    (tmp_path / "idx.csv").write_text("date,close\n2000-01-03,1\n2000-01-04,1\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2  # contract hard-fails
    capsys.readouterr()


def test_cli_convergence(tmp_path):
    out = tmp_path / "conv.csv"
    assert cli.main(["convergence", "--n-min", "100", "--n-max", "300", "--seeds", "2",
                     "--methods", "trapezoid,pseudo_mc", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 + 6

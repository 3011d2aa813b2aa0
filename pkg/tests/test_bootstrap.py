import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specmargin.bootstrap import (
    PRECISION_COLUMNS,
    BootstrapConfig,
    _draw_means,
    average_forecast,
    bootstrap_measure,
    calibrate_mu_sd,
    precision_table,
    ratio_rows,
    replication_rng,
    write_precision_csv,
)
from specmargin.errors import ValidationError
from specmargin.garch import Forecast
from specmargin.riskmeasures import ES, Spectral, VaR, standard_measure

SPECS = [VaR(0.95), ES(0.95), Spectral(50)]


@pytest.fixture(scope="module")
def stds():
    return [standard_measure(s) for s in SPECS]


def test_config_validation():
    with pytest.raises(ValidationError):
        BootstrapConfig(replications=99)
    with pytest.raises(ValidationError):
        BootstrapConfig(calibration="iterated")
    with pytest.raises(ValidationError):
        BootstrapConfig(ci_method="bca")
    with pytest.raises(ValidationError):
        BootstrapConfig(ci_level=1.0)


def test_half_sigma():
    assert calibrate_mu_sd(Forecast(None, 0.0, 2.0)) == 1.0


def test_literal_recipe_algebra():
    # v0 = sigma^2: returns have variance 2 sigma^2, so sd* = sqrt(2) sigma
    # and the rescaled variance is sigma^2 / sqrt(2), not (sigma / 2)^2
    sigma = 1.7
    sd = calibrate_mu_sd(Forecast(None, 0.0, sigma), "literal_appendix1",
                         rng=replication_rng(3), replications=400_000)
    assert sd**2 == pytest.approx(sigma**2 / math.sqrt(2), rel=5e-3)
    assert abs(sd - sigma / 2) > 0.3


def test_sd_vanishes_with_sigma(stds):
    fc = Forecast(None, 0.05, 1e-9)
    assert calibrate_mu_sd(fc) == pytest.approx(5e-10)
    rep = bootstrap_measure(stds[0], fc, BootstrapConfig(replications=1000))
    assert rep.se < 1e-8 and rep.ci[1] - rep.ci[0] < 1e-7


def test_standard_errors_identical(stds):
    fc = Forecast(None, 0.02, 1.3)
    cfg = BootstrapConfig(seed=42)
    reps = [bootstrap_measure(s, fc, cfg) for s in stds]
    assert reps[0].se == reps[1].se == reps[2].se


def test_se_is_std_of_drawn_means(stds):
    fc = Forecast(None, 0.0, 1.0)
    cfg = BootstrapConfig(seed=9)
    rep = bootstrap_measure(stds[1], fc, cfg)
    assert rep.se == float(np.std(_draw_means(fc, cfg, 0), ddof=1))


def test_standardized_metrics_match_tables(stds):
    # one seed carries Monte Carlo noise of about 0.006 per CI bound at m=10000,
    # so the calibration is checked on the average over seeds
    fc = Forecast(None, 0.0, 1.2)
    expected = [(0.303, (0.501, 1.499)), (0.242, (0.602, 1.398)), (0.223, (0.633, 1.367))]
    for std, (st_se, (lb, ub)) in zip(stds, expected):
        reps = [bootstrap_measure(std, fc, BootstrapConfig(seed=s)) for s in range(30)]
        assert np.mean([r.st_se for r in reps]) == pytest.approx(st_se, abs=0.01)
        assert np.mean([r.st_ci[0] for r in reps]) == pytest.approx(lb, abs=0.01)
        assert np.mean([r.st_ci[1] for r in reps]) == pytest.approx(ub, abs=0.01)
        for r in reps:
            assert abs(r.st_ci[1] - ub) < 0.04 and abs(r.st_ci[0] - lb) < 0.04


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 50))
def test_standardized_metrics_scale_free(sigma):
    std = standard_measure(VaR(0.95))
    a = bootstrap_measure(std, Forecast(None, 0.0, 1.0), BootstrapConfig(replications=500))
    b = bootstrap_measure(std, Forecast(None, 0.0, sigma), BootstrapConfig(replications=500))
    assert b.st_se == pytest.approx(a.st_se, abs=1e-9)
    assert b.st_ci[0] == pytest.approx(a.st_ci[0], abs=1e-9)
    assert b.st_ci[1] == pytest.approx(a.st_ci[1], abs=1e-9)


def test_reproducible(stds):
    fc = Forecast(None, -0.1, 0.9)
    cfg = BootstrapConfig(seed=123)
    assert bootstrap_measure(stds[2], fc, cfg) == bootstrap_measure(stds[2], fc, cfg)
    other = bootstrap_measure(stds[2], fc, BootstrapConfig(seed=124))
    assert other.se != bootstrap_measure(stds[2], fc, cfg).se


@pytest.mark.parametrize("mu", [0.0, 0.3, -0.4])
def test_ci_contains_estimate_and_width(stds, mu):
    for std in stds:
        rep = bootstrap_measure(std, Forecast(None, mu, 1.1), BootstrapConfig())
        assert rep.ci[0] <= rep.estimate <= rep.ci[1]
        assert 3.2 <= (rep.ci[1] - rep.ci[0]) / rep.se <= 3.4
        assert rep.st_ci[0] < 1 < rep.st_ci[1]
        assert rep.se >= 0


def test_normal_approx_ci(stds):
    rep = bootstrap_measure(stds[0], Forecast(None, 0.0, 1.0), BootstrapConfig(ci_method="normal_approx"))
    half = 1.6448536269514722 * rep.se
    assert rep.ci == pytest.approx((rep.estimate - half, rep.estimate + half), rel=1e-12)


def test_precision_table_single_forecast():
    rows = precision_table(Forecast(None, 0.0, 1.0), SPECS, BootstrapConfig())
    assert len(rows) == 3
    assert len({r.report.se for r in rows}) == 1
    var, es, srm = (r.report.estimate for r in rows)
    assert es / var == pytest.approx(1.255, abs=1e-3)
    assert srm / var == pytest.approx(1.361, abs=2e-3)


def test_precision_table_per_day_streams():
    fcs = [Forecast(np.datetime64("2002-01-02") + i, 0.01 * i, 1 + 0.1 * i) for i in range(4)]
    rows = precision_table(fcs, SPECS[:2], BootstrapConfig(replications=200))
    assert len(rows) == 8
    # each day shares a stream across specs and days differ
    for i in range(4):
        assert rows[2 * i].report.se == rows[2 * i + 1].report.se
    assert rows[0].report.st_se != rows[2].report.st_se
    with pytest.raises(ValidationError):
        precision_table(fcs, [], BootstrapConfig())


def test_average_forecast():
    fc = average_forecast([Forecast(None, 0.1, 1.0), Forecast(None, 0.3, 2.0)])
    assert (fc.mu, fc.sigma) == pytest.approx((0.2, 1.5))


def test_ratio_rows_and_csv(tmp_path):
    reps = [r.report for r in precision_table(Forecast(None, 0.0, 1.0), SPECS)]
    ratios = ratio_rows(reps, reps[0])
    assert ratios[0]["estimate"] == 1.0 and ratios[1]["se"] == 1.0
    path = tmp_path / "p.csv"
    write_precision_csv(reps, path)
    assert path.read_text().splitlines()[0].split(",") == PRECISION_COLUMNS

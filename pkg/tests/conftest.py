import numpy as np
import pytest

from specmargin.garch import GarchParams, simulate
from specmargin.timeseries import ReturnSeries

TRUE_PARAMS = GarchParams(0.0, 0.10, 0.10, 0.85)


@pytest.fixture(scope="session")
def garch_returns():
    """782 synthetic returns, the sample size of the study."""
    return ReturnSeries.from_values(simulate(GarchParams(0.05, 0.05, 0.08, 0.88), 782, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(criterion, ok, detail):
        _ACCEPTANCE.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

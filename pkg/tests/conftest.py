import warnings

import pytest

from reslife.features import TruncationWarning, pump_feature_rows, renewal_feature_rows
from reslife.sim import PumpSimConfig, RenewalSimConfig, simulate_pumps, simulate_renewal


@pytest.fixture(scope="session")
def renewal_runs():
    return simulate_renewal(RenewalSimConfig(seed=3))


@pytest.fixture(scope="session")
def renewal_rows(renewal_runs):
    return renewal_feature_rows(renewal_runs)


@pytest.fixture(scope="session")
def pump_histories():
    return simulate_pumps(PumpSimConfig(seed=2))


@pytest.fixture(scope="session")
def pump_rows(pump_histories):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return pump_feature_rows(pump_histories, 5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rpf import (  # noqa: E402
    NOMINAL_ALPHA,
    NOMINAL_PARAMS,
    build_homodyne_measurement,
    build_process_model,
    build_uncertainty,
)

# mu configurations of the six comparison sweeps, with the swept axis
SWEEP_CONFIGS = [
    (0.2, 0.0, "delta1"),
    (0.5, 0.0, "delta1"),
    (0.8, 0.0, "delta1"),
    (0.0, 0.3, "delta2"),
    (0.0, 0.5, "delta2"),
    (0.0, 0.9, "delta2"),
]


@pytest.fixture(scope="session")
def proc():
    return build_process_model(NOMINAL_PARAMS)


@pytest.fixture(scope="session")
def meas():
    return build_homodyne_measurement(NOMINAL_ALPHA)


@pytest.fixture(scope="session")
def unc05():
    return build_uncertainty(NOMINAL_PARAMS, 0.5, 0.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

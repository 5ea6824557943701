import numpy as np
import pytest

from metaplan import env
from metaplan.beliefs import fresh_belief

try:
    from tests.acceptance_report import LINES as _ACCEPTANCE_LINES
except ImportError:  # direct invocation from inside tests/
    from acceptance_report import LINES as _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def topology():
    return env.default_topology()


@pytest.fixture
def hvlc():
    return env.get_condition("HVLC")


@pytest.fixture
def lvlc():
    return env.get_condition("LVLC")


@pytest.fixture
def lvhc():
    return env.get_condition("LVHC")


@pytest.fixture
def hv_belief(topology, hvlc):
    return fresh_belief(topology, hvlc)


@pytest.fixture
def lv_belief(topology, lvlc):
    return fresh_belief(topology, lvlc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_trial(topology, condition, values, trial_index=0):
    """Trial with explicit per-node values (scalar broadcasts to all)."""
    if isinstance(values, dict):
        gt = values
    else:
        gt = {n: values for n in topology.non_root}
    return env.Trial(topology, condition, gt, trial_index)

import numpy as np
import pytest

from qflow.delta_shell import converged_resonances
from qflow.resonances import BarrierParams, solve_resonances


@pytest.fixture(scope="session")
def table_params():
    return BarrierParams(6.0, 1.0, 1)


@pytest.fixture(scope="session")
def res40(table_params):
    return solve_resonances(table_params, 40)


@pytest.fixture(scope="session")
def res_early(table_params):
    """Enough poles for tau >= 0.5 everywhere on (0, 10a)."""
    return converged_resonances(table_params, np.linspace(0, 10, 41)[:, None], np.array([[0.5]]))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cbpolitex.envs import make_gridworld
from cbpolitex.oracle import solve_constrained_lp

settings.register_profile("ci", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def grid():
    return make_gridworld(0.9)


@pytest.fixture(scope="session")
def grid_lp(grid):
    return solve_constrained_lp(grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion.

    Usage: ``acceptance(k, ok, detail)``; the lines are printed immediately
    and again in the terminal summary.
    """
    def record(k, ok, detail=""):
        line = f"ACCEPTANCE {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[(k, request.node.name)] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[key])

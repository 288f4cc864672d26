"""Shared fixtures: small spaces and one converged flow per curvature regime.

The flow runs are session-scoped because several test modules (and the
acceptance suite) inspect the same trajectories.
"""

import numpy as np
import pytest

from crqflow import flow
from crqflow.basis import PluriSpace
from crqflow.config import monomial_field
from crqflow.operators import qprime_standard, synthetic_curvature
from crqflow.symmetry import SymmetryGroup

J_FLOW = 12


@pytest.fixture(scope="session")
def space12():
    return PluriSpace(J_FLOW)


@pytest.fixture(scope="session")
def space6():
    return PluriSpace(6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def regime_problem(name, space):
    """(data, u0, FlowConfig) for one of the four reference problems."""
    S = space
    mf = lambda a, b, part, v: monomial_field(S, a, b, part, v)
    if name == "negative":
        data = synthetic_curvature(S, -1.0, S.constant(-1.0) + mf(1, 0, "re", 0.5))
        u0 = mf(1, 0, "re", 0.2) + mf(0, 2, "im", 0.1)
        return data, u0, flow.FlowConfig(max_time=300)
    if name == "zero":
        data = synthetic_curvature(S, mf(1, 1, "re", 3.0), S.constant(0.25) + mf(1, 0, "re", 1.0))
        return data, mf(0, 1, "re", 0.2), flow.FlowConfig(max_time=300)
    if name == "positive":
        data = synthetic_curvature(S, 2.0, S.constant(2.0) + mf(1, 0, "re", 1.0))
        return data, S.zeros(), flow.FlowConfig(max_time=300)
    if name == "critical":
        G = SymmetryGroup.antipodal()
        data = qprime_standard(S, S.constant(4.0) + mf(2, 0, "re", 0.4))
        u0 = mf(2, 0, "im", 0.1) + mf(1, 1, "re", 0.05)
        return data, u0, flow.FlowConfig(max_time=300, symmetry=G)
    raise KeyError(name)


REGIMES = ("negative", "zero", "positive", "critical")


@pytest.fixture(scope="session")
def regime_runs(space12):
    """name -> (data, trajectory) for the four reference problems."""
    out = {}
    for name in REGIMES:
        data, u0, cfg = regime_problem(name, space12)
        out[name] = (data, flow.run(u0, data, cfg))
    return out


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES = {}


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print("\n" + line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

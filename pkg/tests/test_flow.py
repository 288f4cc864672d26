import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crqflow import flow
from crqflow.basis import PluriSpace
from crqflow.config import monomial_field
from crqflow.errors import NumericalAbort, OverflowGuardError, ValidationError
from crqflow.operators import qprime_standard, synthetic_curvature

from conftest import REGIMES, regime_problem


@pytest.fixture(scope="module")
def S():
    return PluriSpace(8)


def _data(S, regime):
    f = S.constant(-1.0) + monomial_field(S, 1, 0, "re", 0.5)
    if regime == "negative":
        return synthetic_curvature(S, -1.0, f)
    return synthetic_curvature(S, 1.0, S.constant(2.0) + monomial_field(S, 1, 0, "re", 1.0))


def _central(fun, u, phi, eps=1e-5):
    return (fun(u + eps * phi) - fun(u - eps * phi)) / (2 * eps)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["negative", "positive"]))
@settings(max_examples=12, deadline=None)
def test_gradients_match_finite_differences(seed, regime):
    S = PluriSpace(8)
    d = _data(S, regime)
    rng = np.random.default_rng(seed)
    u = S.random_field(rng, scale=0.3)
    phi = S.random_field(rng)
    fdE = _central(lambda v: flow.energy(v, d), u, phi)
    fdN = _central(lambda v: flow.constraint_N(v, d), u, phi)
    assert flow.h_inner(flow.grad_E(u, d), phi, d) == pytest.approx(fdE, rel=1e-6)
    assert flow.h_inner(flow.grad_N(u, d), phi, d) == pytest.approx(fdN, rel=1e-6)


def test_energy_and_constraint_on_constants(S):
    d = _data(S, "negative")
    c = S.constant(0.3)
    # E = int u P'bar u + 2 int Q'bar u; only the second term survives
    assert flow.energy(c, d) == pytest.approx(2 * 0.3 * d.q_integral, rel=1e-12)
    assert flow.constraint_N(c, d) == pytest.approx(math.exp(0.6) * S.integrate(d.f_grid()), rel=1e-12)


def test_project_to_X_constant_shift(S):
    d = _data(S, "negative")
    u = S.random_field(np.random.default_rng(1), scale=0.2)
    v, c = flow.project_to_X(u, d)
    assert flow.constraint_N(v, d) == pytest.approx(d.q_integral, rel=1e-13)
    np.testing.assert_allclose(v[1:], u[1:])
    assert v[0] - u[0] == pytest.approx(c * math.sqrt(S.V))


def test_project_to_X_zero_regime(space12):
    d, u0, _ = regime_problem("zero", space12)
    v, s = flow.project_to_X(u0 + space12.constant(0.1), d)
    assert abs(flow.constraint_N(v, d)) < 1e-12


def test_tangent_projection_annihilates_grad_N(S):
    d = _data(S, "negative")
    u = S.random_field(np.random.default_rng(3), scale=0.2)
    w = flow.tangent_projection(S.random_field(np.random.default_rng(4)), u, d)
    assert abs(flow.h_inner(w, flow.grad_N(u, d), d)) < 1e-10 * flow.h_norm(w, d)


def test_grad_X_E_is_tangent(S):
    d = _data(S, "positive")
    u = S.random_field(np.random.default_rng(5), scale=0.2)
    g = flow.grad_X_E(u, d)
    assert abs(flow.h_inner(g, flow.grad_N(u, d), d)) < 1e-9 * max(1.0, flow.h_norm(g, d))


def test_hessian_is_self_adjoint_at_critical_point(regime_runs):
    d, tr = regime_runs["negative"]
    u = tr.final
    rng = np.random.default_rng(0)
    S = d.space
    a = flow.tangent_projection(S.random_field(rng, J=4), u, d)
    b = flow.tangent_projection(S.random_field(rng, J=4), u, d)
    lhs = flow.h_inner(flow.hessian_apply(u, a, d), b, d)
    rhs = flow.h_inner(a, flow.hessian_apply(u, b, d), d)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_overflow_guard(S):
    d = _data(S, "negative")
    with pytest.raises(OverflowGuardError):
        flow.exp2u(S.constant(50.0), d)


@pytest.mark.parametrize("name", REGIMES)
def test_runs_decrease_energy_and_keep_constraint(regime_runs, name):
    d, tr = regime_runs[name]
    E = tr.column("E")
    assert np.all(np.diff(E) <= 1e-12 * np.maximum(1.0, np.abs(E[:-1])))
    assert max(tr.drift) < 1e-8
    assert tr.converged


def test_fixed_step_refinement_order(space12):
    d, u0, _ = regime_problem("negative", space12)
    errs = []
    for h in (0.2, 0.1):
        tr = flow.run(u0, d, flow.FlowConfig(fixed_step=h, max_time=2.0))
        E, D = tr.column("E"), tr.column("dissipation")
        errs.append(abs(D[-1] - (E[0] - E[-1])))
    assert math.log2(errs[0] / errs[1]) > 4.5


def test_callback_stops_run(space12):
    d, u0, _ = regime_problem("positive", space12)
    tr = flow.run(u0, d, flow.FlowConfig(max_time=50), callback=lambda st: st.t > 1.0)
    assert tr.reason == "stopped by monitor" and not tr.converged
    assert 1.0 < tr.rows[-1][0] < 5.0


def test_max_time_reached(space12):
    d, u0, _ = regime_problem("positive", space12)
    tr = flow.run(u0, d, flow.FlowConfig(max_time=0.5))
    assert tr.reason == "max time reached"
    from crqflow.errors import NonConvergence
    with pytest.raises(NonConvergence):
        flow.run(u0, d, flow.FlowConfig(max_time=0.5, raise_on_nonconvergence=True))


def test_validation(S):
    d = _data(S, "negative")
    with pytest.raises(ValidationError):
        flow.FlowConfig(rtol=-1).validate()
    with pytest.raises(ValidationError, match="grad_tol"):
        flow.run(S.random_field(np.random.default_rng(0), scale=0.1), d, flow.FlowConfig(grad_tol=1e6))
    # mean of f is negative, so N(0) < 0 while int Q'bar > 0
    f_neg = S.constant(-1.0) + monomial_field(S, 1, 0, "re", 3.0)
    bad = synthetic_curvature(S, 1.0, f_neg)
    with pytest.raises(ValidationError, match="sign"):
        flow.run(S.zeros(), bad, flow.FlowConfig())


def test_fixed_step_energy_increase_aborts(space12):
    d, u0, _ = regime_problem("negative", space12)
    with pytest.raises(NumericalAbort):
        flow.run(u0 * 20, d, flow.FlowConfig(fixed_step=5.0, max_time=20.0))


def test_zero_regime_classification(regime_runs):
    d, tr = regime_runs["zero"]
    cls = flow.classify_zero_regime(tr.final, d)
    assert cls["delta"] in (-1, 1)
    assert cls["shifted_residual"] < 1e-5


def test_trajectory_csv(tmp_path, regime_runs):
    d, tr = regime_runs["positive"]
    p = tmp_path / "t.csv"
    tr.write_csv(p, {"seed": 0})
    lines = p.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1].split(",") == list(flow.CSV_COLUMNS)
    assert len(lines) == len(tr.rows) + 2


def test_symmetry_enforced_run_stays_invariant():
    from crqflow.symmetry import SymmetryGroup, invariance_drift
    S = PluriSpace(8)
    G = SymmetryGroup([np.diag([np.exp(2j * np.pi / 3), 1])])
    f = S.constant(0.1) + monomial_field(S, 3, 0, "re", 10.0)
    d = qprime_standard(S, f)
    u0 = monomial_field(S, 3, 0, "re", 0.5)
    tr = flow.run(u0, d, flow.FlowConfig(max_time=20, symmetry=G, enforce_symmetry=True))
    assert invariance_drift(tr.states, G, S).max() < 1e-12

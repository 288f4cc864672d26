import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crqflow.basis import PluriSpace, build_basis
from crqflow.errors import ValidationError
from crqflow.operators import (CRITICAL_MASS, coeffs_to_triples, gamma_project, green_function,
                               green_log_fit, multiplier_values, pprime_eigenvalue, pprime_multiplier,
                               pprime_rayleigh, qprime_standard, quadratic_form, resolvent_apply,
                               solve_ell, sublaplacian_eigenvalue, sublaplacian_norm_sq,
                               synthetic_curvature, triples_to_coeffs)


@pytest.fixture(scope="module")
def table():
    return build_basis(5)


def test_gamma_idempotent_and_self_adjoint(table):
    rng = np.random.default_rng(0)
    n = len(table)
    P = np.stack([gamma_project(e, table) for e in np.eye(n)], axis=1)
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.abs(P - P.T).max() < 1e-12
    u, v = rng.normal(size=(2, n))
    assert abs(gamma_project(u, table) @ v - u @ gamma_project(v, table)) < 1e-12


def test_gamma_range_is_pluriharmonic(table):
    c = gamma_project(np.ones(len(table)), table)
    assert np.all(c[~table.pluri_mask] == 0)
    assert np.all(c[table.pluri_mask] == 1)


@pytest.mark.parametrize("j", range(0, 7))
def test_pprime_multiplier_formula(j):
    assert pprime_eigenvalue(j) == 4 * j * (j + 1)
    assert sublaplacian_eigenvalue(j) == -j


@pytest.mark.parametrize("j", [1, 2, 4])
def test_rayleigh_quotient_matches_symbolic(j):
    assert pprime_rayleigh(j) == pytest.approx(float(pprime_eigenvalue(j)), rel=1e-10)


def test_multiplier_nonnegative_with_constant_kernel(table):
    mu = pprime_multiplier(table).values
    assert np.all(mu >= 0)
    pl = table.pluri_mask
    kernel = np.flatnonzero(pl & (mu == 0))
    assert list(kernel) == [0]
    S = PluriSpace(8)
    m = pprime_multiplier(S)
    assert m.lambda1 == 8.0
    np.testing.assert_array_equal(m.values, multiplier_values(S))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_quadratic_form_dominates_sublaplacian(seed):
    S = PluriSpace(10)
    c = S.random_field(np.random.default_rng(seed))
    assert quadratic_form(c, S) >= 4 * sublaplacian_norm_sq(c, S) - 1e-12


def test_resolvent_inverts_shifted_operator():
    S = PluriSpace(6)
    c = S.random_field(np.random.default_rng(1))
    np.testing.assert_allclose(resolvent_apply((multiplier_values(S) + 1) * c, S), c, rtol=1e-14)


def test_standard_curvature_is_critical():
    S = PluriSpace(4)
    d = qprime_standard(S)
    assert d.regime == "critical"
    assert d.q_integral == pytest.approx(CRITICAL_MASS, rel=1e-12)


def test_regime_classification_and_hypotheses():
    S = PluriSpace(4)
    assert synthetic_curvature(S, -1.0).regime == "negative"
    assert synthetic_curvature(S, 0.5).regime == "positive"
    d = synthetic_curvature(S, -1.0, S.constant(1.0))
    with pytest.raises(ValidationError, match=r"\(i\)"):
        d.check_hypotheses()
    with pytest.raises(ValidationError):
        synthetic_curvature(S, 5.0)
    d0 = synthetic_curvature(S, 0.0, S.constant(1.0))
    with pytest.raises(ValidationError, match=r"\(ii\)"):
        d0.check_hypotheses()


def test_solve_ell():
    S = PluriSpace(5)
    q = S.random_field(np.random.default_rng(4))
    q[0] = 0.0
    d = synthetic_curvature(S, q)
    ell = solve_ell(d)
    np.testing.assert_allclose(multiplier_values(S) * ell + q, 0, atol=1e-14)
    with pytest.raises(ValidationError):
        solve_ell(synthetic_curvature(S, -1.0))


def test_triples_roundtrip():
    S = PluriSpace(5)
    c = S.random_field(np.random.default_rng(7))
    const, modes = coeffs_to_triples(c, S)
    np.testing.assert_allclose(triples_to_coeffs(const, modes, S), c)
    with pytest.raises(ValidationError):
        triples_to_coeffs(0, [(9, 0, 1.0)], S)


def test_curvature_dict_roundtrip():
    S = PluriSpace(4)
    d = synthetic_curvature(S, -1.0, S.constant(-1.0) + S.random_field(np.random.default_rng(1)))
    d2 = type(d).from_dict(d.to_dict(), S)
    np.testing.assert_allclose(d2.f, d.f)
    np.testing.assert_allclose(d2.qbar, d.qbar)


def test_green_pairing_reproduces_mean_free_value():
    S = PluriSpace(8)
    y = (0.6, 0.8j)
    G = green_function(S, y)
    psi = S.random_field(np.random.default_rng(2))
    want = S.evaluate(psi, y[0], y[1]) - S.mean(psi)
    assert G.pairing(psi) == pytest.approx(float(want), rel=1e-12)


def test_green_log_slope_small_band():
    res = green_log_fit(PluriSpace(16), n=2000)
    assert res["slope"] < 0
    assert res["relative_error"] < 0.2
    with pytest.raises(ValidationError):
        green_log_fit(PluriSpace(4), shell=(0.5, 0.6))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crqflow import inequalities as I
from crqflow.basis import PluriSpace
from crqflow.errors import ValidationError
from crqflow.mobius import bubble_coefficients
from crqflow.operators import quadratic_form, sublaplacian_norm_sq

P = np.array([0.6, 0.8j])


@pytest.fixture(scope="module")
def S32():
    return PluriSpace(32)


@pytest.mark.parametrize("r", [1.5, 2.0])
def test_bubble_closed_forms_match_truncated_series(r):
    S = PluriSpace(80)
    c = bubble_coefficients(S, P, r, mean_zero=True)
    assert quadratic_form(c, S) == pytest.approx(I.bubble_quadratic_form(r, S.V), rel=1e-8)
    assert sublaplacian_norm_sq(c, S) == pytest.approx(I.bubble_sublaplacian_norm_sq(r, S.V), rel=1e-8)


def test_bubble_grid_values_are_mean_zero(S32):
    v = I.bubble_grid_values(S32, P, 2.0)
    assert abs(S32.integrate(v)) < 1e-10


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 5.0))
@settings(max_examples=30, deadline=None)
def test_beckner_onofri_nonnegative_on_random_fields(seed, norm):
    S = PluriSpace(8)
    c = S.random_field(np.random.default_rng(seed), decay=1.5)
    c[0] = 0
    c *= norm / math.sqrt(quadratic_form(c, S) + c @ c)
    assert I.beckner_onofri_deficit(c, S).value >= -1e-9


def test_beckner_onofri_vanishes_on_bubbles(S32):
    for r in (1.5, 2.0, 3.0):
        assert abs(I.bubble_beckner_onofri(S32, P, r).value) < 1e-5


def test_beckner_onofri_second_order_near_zero():
    S = PluriSpace(4)
    c = S.zeros()
    c[S.index_of(2, 0)] = 1.0
    d1 = I.beckner_onofri_deficit(1e-2 * c, S).value
    d2 = I.beckner_onofri_deficit(2e-2 * c, S).value
    assert d1 > 0 and d2 / d1 == pytest.approx(4.0, rel=0.05)


def test_jacobian_profile_is_not_extremal(S32):
    assert I.bubble_jacobian_profile_deficit(S32, P, 2.0).value > 1e-3


def test_random_sweep_report():
    rep = I.random_deficit_sweep(PluriSpace(6), n=20, max_norm=2.0, seed=1)
    assert len(rep.rows) == 20
    assert rep.value == rep.minimum
    assert all(0 < r["norm"] <= 2.0 + 1e-12 for r in rep.rows)


def test_adams_bounded_at_sharp_exponent_and_growing_above(S32):
    rows = I.adams_sweep(S32, P, radii=(1, 2, 4), exponents=(32.0, 64.0))
    a32 = [r["value"] for r in rows if r["A"] == 32.0]
    a64 = [r["value"] for r in rows if r["A"] == 64.0]
    assert max(a32) < 300
    assert a64[0] < a64[1] < a64[2]
    assert a64[2] > 10 * max(a32)


def test_adams_undefined_on_constants():
    S = PluriSpace(4)
    with pytest.raises(ValidationError):
        I.adams_ratio(S.constant(1.0), S)


def test_improved_functional_on_constants():
    S = PluriSpace(4)
    g = np.full(S.grid.shape, 0.7)
    assert I.improved_mt_functional(0.0, g, S, 0.01) == pytest.approx(-math.log(S.V), abs=1e-12)


def test_improved_scan_centred_values_stay_bounded(S32):
    rep = I.improved_mt_scan(I.IMPROVED_THRESHOLD + 1e-4, S32, P, radii=(1, 2, 4))
    cen = [r["centered"] for r in rep.rows]
    unc = [r["uncentered"] for r in rep.rows]
    assert max(cen) - min(cen) < 0.05
    assert unc[-1] < unc[0] - 0.5


def test_moment_exponents_count():
    assert len(I.moment_exponents(1)) == 4
    assert len(I.moment_exponents(2)) == 14


def test_antipodal_pair_annihilates_degree_one():
    cfg = I.PointConfiguration(np.array([[1, 0], [-1, 0]], dtype=complex), np.array([0.5, 0.5]))
    assert np.abs(I.moment_residual(cfg, 1)).max() < 1e-15
    assert np.abs(I.moment_residual(cfg, 2)).max() > 0.1


def test_configuration_validation():
    with pytest.raises(ValidationError):
        I.PointConfiguration(np.array([[1, 0]], dtype=complex), np.array([0.5]))
    with pytest.raises(ValidationError):
        I.PointConfiguration(np.array([[2, 0]], dtype=complex), np.array([1.0]))


def test_nm_degree_one():
    assert not I.nm_solver(1, 1, starts=10).feasible
    res = I.nm_solver(1, 2, starts=20)
    assert res.feasible and res.residual < 1e-10
    assert np.abs(I.moment_residual(res.config, 1)).max() < 1e-10


def test_nm_rejects_out_of_range():
    with pytest.raises(ValidationError):
        I.nm_solver(3, 2)
    with pytest.raises(ValidationError):
        I.nm_solver(1, 0)

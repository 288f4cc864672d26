"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest -v tests/test_acceptance.py``; the lines are
repeated in the "acceptance criteria" section of the terminal summary.
Tolerances are the stated ones; nothing here is loosened to make a check pass.
"""

import math

import numpy as np
import pytest

from crqflow import diagnostics as D
from crqflow import flow
from crqflow import inequalities as I
from crqflow import mobius as M
from crqflow.basis import PluriSpace, build_basis
from crqflow.config import monomial_field
from crqflow.errors import OverflowGuardError
from crqflow.frame import frame_constants
from crqflow.operators import (CRITICAL_MASS, gamma_project, green_log_fit, pprime_multiplier,
                               qprime_standard, solve_ell, synthetic_curvature)
from crqflow.symmetry import SymmetryGroup, invariance_drift

from conftest import regime_problem, report

SUBCRITICAL = ("negative", "zero", "positive")


# 1 --------------------------------------------------------------------------

def test_criterion_01_normalisation_anchor():
    fc = frame_constants()
    S = PluriSpace(4)
    data = qprime_standard(S)
    q_grid = data.space.synthesize(data.qbar)
    constant = float(np.ptp(q_grid)) == 0.0 and not np.any(data.qbar[1:])
    rel = abs(float(fc.qprime) * fc.volume / (16 * math.pi ** 2) - 1.0)
    rel_int = abs(data.q_integral / (16 * math.pi ** 2) - 1.0)
    ok = constant and rel < 1e-10 and rel_int < 1e-10
    report(1, ok, f"Q' = {float(fc.qprime)} constant={constant}; |Q'V/16pi^2 - 1| = {rel:.1e} "
                  f"(grid {rel_int:.1e}; tol 1e-10)")
    assert ok


# 2 --------------------------------------------------------------------------

def test_criterion_02_operator_suite():
    table = build_basis(12)
    grid = table.default_grid()
    n = len(table)
    P = np.stack([gamma_project(e, table) for e in np.eye(n)], axis=1)
    idem = float(np.abs(P @ P - P).max())
    sym = float(np.abs(P - P.T).max())
    # the same projection acting on grid functions (quadrature inner product)
    S = PluriSpace(12)
    rng = np.random.default_rng(2)
    f, g = rng.normal(size=(2,) + S.grid.shape)
    Gf, Gg = S.synthesize(S.analyze(f)), S.synthesize(S.analyze(g))
    idem_grid = float(np.abs(S.synthesize(S.analyze(Gf)) - Gf).max())
    sym_grid = abs(S.integrate(Gf * g) - S.integrate(f * Gg)) / S.integrate(np.abs(f * g))

    mu = pprime_multiplier(table).values
    pl = table.pluri_mask
    nonneg = bool(np.all(mu >= 0))
    kernel = [table.elements[i].bidegree for i in np.flatnonzero(pl & (mu == 0))]
    ker_const = kernel == [table.elements[0].bidegree] and table.elements[0].bidegree.j == 0

    lam = table.eigenvalues
    worst = np.inf
    for _ in range(100):
        c = np.where(pl, rng.normal(size=n) / (1 + np.abs(lam)) ** 0.5, 0.0)
        quad = float(c @ (mu * c))
        lap = float(np.sum((lam * c) ** 2))
        worst = min(worst, quad - 4 * lap)
    ok = (max(idem, sym, idem_grid, sym_grid) < 1e-12 and nonneg and ker_const and worst >= 0)
    report(2, ok, f"Gamma idempotent {max(idem, idem_grid):.1e}, self-adjoint {max(sym, sym_grid):.1e} "
                  f"(tol 1e-12); P'bar >= 0: {nonneg}; ker = constants: {ker_const}; "
                  f"min(int uP'u - 4||Delta_b u||^2) over 100 fields = {worst:.3g}")
    assert ok


# 3 --------------------------------------------------------------------------

def test_criterion_03_gradients():
    S = PluriSpace(12)
    rng = np.random.default_rng(3)
    datas = [regime_problem(r, S)[0] for r in ("negative", "zero", "positive", "critical")]
    worst = 0.0
    for k in range(20):
        d = datas[k % 4]
        u = S.random_field(rng, scale=0.3)
        phi = S.random_field(rng)
        eps = 1e-5
        for fun, grad in ((flow.energy, flow.grad_E), (flow.constraint_N, flow.grad_N)):
            fd = (fun(u + eps * phi, d) - fun(u - eps * phi, d)) / (2 * eps)
            an = flow.h_inner(grad(u, d), phi, d)
            worst = max(worst, abs(an - fd) / abs(fd))
    ok = worst < 1e-6
    report(3, ok, f"max relative FD mismatch over 20 (u, phi) pairs x (E, N) = {worst:.2e} (tol 1e-6)")
    assert ok


# 4 --------------------------------------------------------------------------

REFINE_STEPS = (0.2, 0.1)
METHOD_ORDER = 5


def _refinement_order(name, space):
    data, u0, cfg = regime_problem(name, space)
    errs = []
    for h in REFINE_STEPS:
        tr = flow.run(u0, data, flow.FlowConfig(fixed_step=h, max_time=2.0, symmetry=cfg.symmetry))
        E, Dc = tr.column("E"), tr.column("dissipation")
        errs.append(abs(Dc[-1] - (E[0] - E[-1])) / abs(E[0] - E[-1]))
    return errs, math.log2(errs[0] / errs[1])


def test_criterion_04_flow_invariants(regime_runs, space12):
    parts, ok = [], True
    for name, (data, tr) in regime_runs.items():
        E = tr.column("E")
        mono = bool(np.all(np.diff(E) <= 1e-12 * np.maximum(1.0, np.abs(E[:-1]))))
        drift = max(tr.drift)
        ident = D.energy_identity_check(tr)
        errs, order = _refinement_order(name, space12)
        good = mono and drift < 1e-8 and ident < 1e-4 and order >= METHOD_ORDER - 0.5
        ok &= good
        parts.append(f"{name}: monotone={mono} drift={drift:.1e} identity={ident:.1e} "
                     f"order(h={REFINE_STEPS[0]}->{REFINE_STEPS[1]})={order:.2f}")
    report(4, ok, "; ".join(parts))
    assert ok


# 5 --------------------------------------------------------------------------

def test_criterion_05_zero_regime(regime_runs):
    data, tr = regime_runs["zero"]
    S = data.space
    mean = tr.column("mean_u")
    mdrift = float(np.max(np.abs(mean - mean[0])))
    cls = flow.classify_zero_regime(tr.final, data)
    ell = solve_ell(data)
    fe2l = S.integrate(data.f_grid() * np.exp(2 * S.synthesize(ell)))
    ok = mdrift < 1e-8 and cls["delta"] in (-1, 0, 1)
    if fe2l != 0.0:
        ok &= cls["delta"] != 0 and cls["shifted_residual"] < 1e-5
    report(5, ok, f"|ubar(t) - ubar(0)| <= {mdrift:.1e}; delta = {cls['delta']} "
                  f"(int f e^(2l) = {fe2l:.4g}); shifted residual = {cls.get('shifted_residual', 0):.1e}")
    assert ok


# 6 --------------------------------------------------------------------------

def _regime6(data, tr):
    res, lam = flow.residual(tr.final, data)
    grad = tr.rows[-1][4]
    beta = D.rate_fit(tr, data).beta
    lam_ok = abs(lam - 1) <= 1e-4 if data.q_integral != 0 else True
    good = tr.converged and grad < 1e-7 and lam_ok and res < 1e-5 and beta > 0
    return good, f"grad={grad:.1e} lambda={lam:.6g} residual={res:.1e} beta={beta:.3g}"


def test_criterion_06_convergence_and_multiplier(regime_runs):
    parts, ok = [], True
    for name in SUBCRITICAL:
        good, txt = _regime6(*regime_runs[name])
        ok &= good
        parts.append(f"{name}: {txt}")
    report(6, ok, "; ".join(parts))
    assert ok


# 7 --------------------------------------------------------------------------

def test_criterion_07_beckner_onofri():
    S = PluriSpace(12)
    sweep = I.random_deficit_sweep(S, n=500, max_norm=5.0, seed=7)
    norms_ok = all(r["norm"] <= 5.0 + 1e-12 for r in sweep.rows) and len(sweep.rows) == 500
    B = PluriSpace(32)
    p = np.array([0.6, 0.8j])
    radii = (1.0, 1.5, 2.0, 2.5, 3.0)
    bub = [abs(I.bubble_beckner_onofri(B, p, r).value) for r in radii]
    ok = norms_ok and sweep.value >= -1e-9 and max(bub) < 1e-5
    report(7, ok, f"min deficit over 500 fields = {sweep.value:.2e} (>= -1e-9); "
                  f"max |deficit| on bubbles r in {radii} = {max(bub):.1e} (< 1e-5)")
    assert ok


# 8 --------------------------------------------------------------------------

def test_criterion_08_moebius_invariance_and_centring():
    S0 = PluriSpace(4)
    S = PluriSpace(64)
    u = S0.random_field(np.random.default_rng(8), J=3, scale=0.3)
    uu = S.embed(u, S0)
    f_of = lambda z1, z2: 4.0 + np.real(z1)
    data = qprime_standard(S)
    E0 = flow.energy(uu, data)
    N0 = S.integrate(f_of(S.grid.z1, S.grid.z2) * np.exp(2 * S.synthesize(uu)))
    p = np.array([0.6, 0.8j])
    pts = np.stack([S.grid.z1.ravel(), S.grid.z2.ravel()], -1)
    dE = dN = 0.0
    for r in (1.0, 2.0, 3.0):
        h = M.SphereAutomorphism(p, r)
        pb = M.pullback(u, h, S, u_space=S0)
        hz = h(pts)
        fh = f_of(hz[:, 0], hz[:, 1]).reshape(S.grid.shape)
        dE = max(dE, abs(flow.energy(pb.coefficients, data) - E0))
        dN = max(dN, abs(S.integrate(fh * np.exp(2 * pb.values)) - N0))
    # centring a planted bubble
    C = PluriSpace(32)
    q, r0 = np.array([0.6, 0.8j]), 5.0
    g = M.half_log_jacobian(M.SphereAutomorphism(q, r0), C.grid.z1, C.grid.z2)
    res = M.center(None, C, values=g)
    # the centring map undoes h_{q,r0}; in the r >= 1 chart that is h_{-q,r0}
    rec_r = abs(res.r / r0 - 1)
    rec_p = float(np.linalg.norm(res.p + q))
    ok = dE < 1e-6 and dN < 1e-6 and res.residual < 1e-8 and rec_r < 0.01 and rec_p < 0.01
    report(8, ok, f"J=64: max|dE| = {dE:.1e}, max|dN| = {dN:.1e} (tol 1e-6, r in 1,2,3); "
                  f"centring residual {res.residual:.1e}, |r/r0 - 1| = {rec_r:.1e}, |p + p0| = {rec_p:.1e}")
    assert ok


# 9 --------------------------------------------------------------------------

def test_criterion_09_nm_combinatorics():
    expected = {1: 2, 2: 4}
    parts, ok = [], True
    for m, N in expected.items():
        below = I.nm_solver(m, N - 1, starts=100, seed=90 + m)
        at = I.nm_solver(m, N, starts=100, seed=190 + m)
        good = (not below.feasible) and at.feasible and at.residual < 1e-10
        ok &= good
        parts.append(f"N_{m}={N}: N-1 {below.verdict} (res {below.residual:.2e}), "
                     f"N {at.verdict} (res {at.residual:.2e})")
    if not ok:
        five = I.nm_solver(2, 5, starts=100, seed=292)
        parts.append(f"m=2, N=5: {five.verdict} (res {five.residual:.1e})")
    report(9, ok, "; ".join(parts))
    assert ok


# 10 -------------------------------------------------------------------------

def test_criterion_10_green_slope():
    res = green_log_fit(PluriSpace(24))
    ok = res["relative_error"] < 0.05
    report(10, ok, f"slope = {res['slope']:.6f} vs -1/(4pi^2) = {res['target']:.6f}; "
                   f"relative error {res['relative_error']:.2%} (tol 5%)")
    assert ok


# 11 -------------------------------------------------------------------------

W3 = np.exp(2j * np.pi / 3)
CONC_J = 32
CONC_RADIUS = 0.5


def _violating_case():
    """G = <diag(w, 1)> fixes the circle {z1 = 0}; f = 4 + 2 Re z2 peaks on it."""
    G = SymmetryGroup([np.diag([W3, 1])])
    S = PluriSpace(CONC_J)
    data = qprime_standard(S, S.constant(4.0) + monomial_field(S, 0, 1, "re", 2.0))
    u0 = S.zeros()
    thr = D.critical_threshold_check(flow.project_to_X(u0, data)[0], data, G.fixed_set())
    f_grid = data.f_grid()
    seen = {"mass": 0.0}

    def monitor(state):
        pm = D.peak_mass(state.u, S, f_grid, CONC_RADIUS)
        seen["mass"] = max(seen["mass"], pm["mass"])
        return pm["mass"] > 0.9 * CRITICAL_MASS

    try:
        tr = flow.run(u0, data, flow.FlowConfig(max_time=300, symmetry=G), callback=monitor)
        outcome = tr.reason
    except OverflowGuardError:
        outcome = "overflow guard"
    detected = outcome in ("stopped by monitor", "overflow guard")
    return thr, detected, outcome, seen["mass"]


def _satisfying_case():
    """Same group; f = 0.1 + 10 Re z1^3 equals 0.1 on the fixed circle."""
    G = SymmetryGroup([np.diag([W3, 1])])
    S = PluriSpace(12)
    data = qprime_standard(S, S.constant(0.1) + monomial_field(S, 3, 0, "re", 10.0))
    u0 = monomial_field(S, 3, 0, "re", 0.5)
    thr = D.critical_threshold_check(flow.project_to_X(u0, data)[0], data, G.fixed_set())
    tr = flow.run(u0, data, flow.FlowConfig(max_time=300, symmetry=G, enforce_symmetry=True))
    good, txt = _regime6(data, tr)
    drift = float(invariance_drift(tr.states, G, S).max())
    return thr, good and drift < 1e-10, f"{txt} invariance drift={drift:.1e}"


def test_criterion_11_critical_threshold():
    thr_v, detected, outcome, mass = _violating_case()
    thr_s, conv_ok, txt = _satisfying_case()
    ok = (not thr_v["satisfied"]) and detected and thr_s["satisfied"] and conv_ok
    report(11, ok,
           f"violating (sup_Sigma f = {thr_v['sup_f_on_sigma']:.3g} > {thr_v['threshold']:.3g}): "
           f"{outcome}, peak ball mass {mass / CRITICAL_MASS:.4f} x 16pi^2 (J={CONC_J}, radius "
           f"{CONC_RADIUS}); satisfying (sup = {thr_s['sup_f_on_sigma']:.3g} <= "
           f"{thr_s['threshold']:.3g}): {txt}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main(["-v", "-s", __file__]))

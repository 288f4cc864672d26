"""The constrained negative-gradient flow  du/dt = -grad^X E(u)  on pluriharmonic fields.

All gradients are Riesz representatives in the H inner product
<a, b>_H = sum (mu_i + 1) a_i b_i, where mu_i is the P'bar multiplier.

    E(u)      = int u P'bar u + 2 int Q'bar u
    N(u)      = int f e^{2u}             (= int Gamma(f e^{2u}))
    grad E    = 2 (P'bar + I)^{-1} (P'bar u + Q'bar)
    grad N    = 2 (P'bar + I)^{-1} Gamma(f e^{2u})
    grad^X E  = grad E - lambda grad N,  lambda = <grad E, grad N>_H / |grad N|_H^2

Time stepping is Dormand-Prince 5(4) with a PI controller on the H-norm of
the local error.  The accumulated dissipation int |du/ds|_H^2 ds is carried
as an extra ODE component, so it is integrated by the same rule as u.
After every accepted step u is pulled back onto X exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (ConstraintDriftError, NonConvergence, NumericalAbort,
                     OverflowGuardError, StepUnderflowError, ValidationError)
from .operators import CurvatureData, multiplier_values

OVERFLOW_CAP = 40.0


# ---------------------------------------------------------------------------
# functionals and gradients
# ---------------------------------------------------------------------------

def _mu(data: CurvatureData) -> np.ndarray:
    return multiplier_values(data.space)


def h_inner(a, b, data: CurvatureData) -> float:
    return float(np.dot((_mu(data) + 1.0) * a, b))


def h_norm(a, data: CurvatureData) -> float:
    return math.sqrt(max(h_inner(a, a, data), 0.0))


def energy(u, data: CurvatureData) -> float:
    u = np.asarray(u)
    return float(np.dot(u, _mu(data) * u) + 2.0 * np.dot(data.qbar, u))


def exp2u(u, data: CurvatureData, cap: float = OVERFLOW_CAP) -> np.ndarray:
    """e^{2u} on the grid, guarded against overflow."""
    g = data.space.synthesize(u)
    m = 2.0 * float(np.max(np.abs(g)))
    if m > cap:
        raise OverflowGuardError(
            f"max |2u| = {m:.1f} exceeds {cap:g} on the grid; the conformal factor is "
            "concentrating -- renormalise (e.g. centre with a Moebius map) or raise J")
    return np.exp(2.0 * g)


def constraint_N(u, data: CurvatureData, cap: float = OVERFLOW_CAP) -> float:
    return data.space.integrate(data.f_grid() * exp2u(u, data, cap))


def gamma_fe2u(u, data: CurvatureData, cap: float = OVERFLOW_CAP) -> np.ndarray:
    """Coefficients of Gamma(f e^{2u})."""
    return data.space.analyze(data.f_grid() * exp2u(u, data, cap))


def grad_E(u, data: CurvatureData) -> np.ndarray:
    mu = _mu(data)
    return 2.0 * (mu * np.asarray(u) + data.qbar) / (mu + 1.0)


def grad_N(u, data: CurvatureData, gfe=None) -> np.ndarray:
    gfe = gamma_fe2u(u, data) if gfe is None else gfe
    g = 2.0 * gfe / (_mu(data) + 1.0)
    if not np.any(g):
        raise NumericalAbort("grad N vanishes: Gamma(f e^{2u}) = 0")
    return g


def _lambda_from(gE, gN, data) -> float:
    nn = h_inner(gN, gN, data)
    if nn == 0.0:
        raise NumericalAbort("grad N vanishes: Gamma(f e^{2u}) = 0")
    return h_inner(gE, gN, data) / nn


def lambda_multiplier(u, data: CurvatureData) -> float:
    return _lambda_from(grad_E(u, data), grad_N(u, data), data)


def grad_X_E(u, data: CurvatureData) -> np.ndarray:
    gE, gN = grad_E(u, data), grad_N(u, data)
    return gE - _lambda_from(gE, gN, data) * gN


def residual(u, data: CurvatureData):
    """(||P'bar u + Q'bar - lambda Gamma(f e^{2u})||_{L^2}, lambda)."""
    gfe = gamma_fe2u(u, data)
    lam = _lambda_from(grad_E(u, data), grad_N(u, data, gfe), data)
    r = _mu(data) * u + data.qbar - lam * gfe
    return float(np.linalg.norm(r)), lam


def tangent_projection(v, u, data: CurvatureData) -> np.ndarray:
    gN = grad_N(u, data)
    return v - h_inner(v, gN, data) / h_inner(gN, gN, data) * gN


def hessian_apply(u_inf, v, data: CurvatureData) -> np.ndarray:
    """Second variation of E on X at a critical point, as an H-self-adjoint map.

    eta [ 2 (I - (P'bar + 1)^{-1}) v - 4 lambda (P'bar + 1)^{-1} Gamma(f e^{2u} v) ],
    eta the H-orthogonal projection onto the tangent space of X.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return np.zeros_like(v)
    mu = _mu(data)
    lam = lambda_multiplier(u_inf, data)
    w = data.f_grid() * exp2u(u_inf, data) * data.space.synthesize(v)
    hv = 2.0 * mu / (mu + 1.0) * v - 4.0 * lam * data.space.analyze(w) / (mu + 1.0)
    return tangent_projection(hv, u_inf, data)


# ---------------------------------------------------------------------------
# constraint maintenance
# ---------------------------------------------------------------------------

def project_to_X(u, data: CurvatureData, tol: float = 1e-14, max_iter: int = 50):
    """Return (u', shift) with N(u') = int Q'bar.

    Nonzero int Q'bar: u' = u + c, c = 1/2 ln(int Q'bar / N(u)) (exact by scaling).
    Zero int Q'bar: a one-dimensional root solve along grad N(u).
    ``shift`` is c, or the step length along grad N.
    """
    u = np.array(u, dtype=float)
    target = data.q_integral
    n = constraint_N(u, data)
    sqV = math.sqrt(data.space.V)
    if data.regime != "zero":
        if n == 0.0 or np.sign(n) != np.sign(target):
            raise ConstraintDriftError(
                f"N(u) = {n:.6g} has the wrong sign for int Q'bar = {target:.6g}; "
                "constant shifts cannot restore the constraint")
        c = 0.5 * math.log(target / n)
        u[0] += c * sqV
        return u, c
    # zero regime: N(u + s g) = 0 along g = grad N(u)
    g = grad_N(u, data)
    scale = data.space.integrate(np.abs(data.f_grid()) * exp2u(u, data))
    if abs(n) <= tol * scale:
        return u, 0.0
    phi = lambda s: constraint_N(u + s * g, data)
    s = 0.0
    val = n
    for _ in range(max_iter):
        deriv = h_inner(grad_N(u + s * g, data), g, data)
        if deriv == 0.0:
            break
        s_new = s - val / deriv
        val_new = phi(s_new)
        if abs(val_new) > abs(val):
            break
        s, val = s_new, val_new
        if abs(val) <= tol * scale:
            return u + s * g, s
    # safeguarded fallback: bracket and bisect
    lo, hi = -1.0, 1.0
    for _ in range(40):
        if np.sign(phi(lo)) != np.sign(phi(hi)):
            s = brentq(phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return u + s * g, s
        lo, hi = 2 * lo, 2 * hi
    raise ConstraintDriftError("could not restore N(u) = 0 along grad N")


# ---------------------------------------------------------------------------
# configuration, state, trajectory
# ---------------------------------------------------------------------------

@dataclass
class FlowConfig:
    initial_step: float = 0.05
    rtol: float = 1e-10
    atol: float = 1e-12
    safety: float = 0.9
    max_step: float = 0.5
    min_step: float = 1e-10
    drift_tol: float = 1e-8
    grad_tol: float = 1e-7
    stagnation_window: int = 10
    max_time: float = 500.0
    max_steps: int = 200000
    fixed_step: Optional[float] = None
    overflow_cap: float = OVERFLOW_CAP
    monotone_tol: float = 1e-12
    symmetry: object = None
    enforce_symmetry: bool = False
    raise_on_nonconvergence: bool = False

    def validate(self, initial_grad: float | None = None):
        for name in ("initial_step", "rtol", "atol", "max_step", "min_step",
                     "drift_tol", "grad_tol", "max_time"):
            v = getattr(self, name)
            if not (v > 0):
                raise ValidationError(f"{name} must be positive (got {v!r})")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValidationError("fixed_step must be positive")
        if self.stagnation_window < 1:
            raise ValidationError("stagnation_window must be >= 1")
        if initial_grad is not None and not self.grad_tol < initial_grad:
            raise ValidationError(
                f"grad_tol = {self.grad_tol:g} is not below the initial gradient norm {initial_grad:g}")


@dataclass
class FlowState:
    u: np.ndarray
    t: float
    E: float
    N: float
    grad_norm: float
    dissipation: float = 0.0


CSV_COLUMNS = ("t", "E", "N", "mean_u", "grad_norm", "norm_u", "dissipation",
               "step_size", "projection_shift")


@dataclass
class Trajectory:
    rows: list = field(default_factory=list)
    states: list = field(default_factory=list)
    drift: list = field(default_factory=list)
    rejected: int = 0
    converged: bool = False
    reason: str = ""

    def column(self, name) -> np.ndarray:
        i = CSV_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def times(self):
        return self.column("t")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def write_csv(self, path, header: dict | None = None):
        with open(path, "w", newline="") as fh:
            for k, v in (header or {}).items():
                fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([repr(float(x)) for x in r])


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)
# ---------------------------------------------------------------------------

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rhs(u, data, cap):
    gfe = gamma_fe2u(u, data, cap)
    gE = grad_E(u, data)
    gN = grad_N(u, data, gfe)
    F = -(gE - _lambda_from(gE, gN, data) * gN)
    return F, h_inner(F, F, data)


def _dp_step(u, h, data, cap):
    ks, ds = [], []
    for i in range(7):
        ui = u + h * sum(a * k for a, k in zip(_A[i], ks)) if i else u
        F, d = _rhs(ui, data, cap)
        ks.append(F)
        ds.append(d)
    ks_arr = np.array(ks)
    ds_arr = np.array(ds)
    u5 = u + h * (_B5 @ ks_arr)
    d5 = h * float(_B5 @ ds_arr)
    eu = h * ((_B5 - _B4) @ ks_arr)
    ed = h * float((_B5 - _B4) @ ds_arr)
    return u5, d5, eu, ed, ds[0]


def step(state: FlowState, h: float, data: CurvatureData, cfg: FlowConfig):
    """One Dormand-Prince trial step of size h (no acceptance logic).

    Returns (new_state_before_projection, error_ratio).
    """
    u5, d5, eu, ed, _ = _dp_step(state.u, h, data, cfg.overflow_cap)
    unorm = h_norm(state.u, data)
    sc = cfg.atol + cfg.rtol * max(unorm, h_norm(u5, data))
    dsc = cfg.atol + cfg.rtol * max(abs(state.dissipation), abs(state.dissipation + d5))
    err = max(h_norm(eu, data) / sc, abs(ed) / dsc)
    new = FlowState(u5, state.t + h, float("nan"), float("nan"), float("nan"),
                    state.dissipation + d5)
    return new, err


def _finish_state(u, t, diss, data, cap):
    F, g2 = _rhs(u, data, cap)
    return FlowState(u, t, energy(u, data), constraint_N(u, data, cap), math.sqrt(g2), diss)


def run(u0, data: CurvatureData, cfg: FlowConfig | None = None,
        callback: Callable | None = None) -> Trajectory:
    """Integrate the flow from u0 (projected onto X first).

    Terminates when grad^X E stays below ``grad_tol`` for ``stagnation_window``
    consecutive accepted steps, or at ``max_time`` (non-converged).  A
    ``callback(state)`` returning True stops the run early.
    """
    cfg = cfg or FlowConfig()
    data.check_hypotheses()
    u0 = np.asarray(u0, dtype=float)
    if data.regime != "zero":
        n0 = constraint_N(u0, data, cfg.overflow_cap)
        if np.sign(n0) != np.sign(data.q_integral):
            raise ValidationError(
                f"u0 has N(u0) = {n0:.6g}, whose sign does not match int Q'bar = {data.q_integral:.6g}")
    u, shift0 = project_to_X(u0, data)
    sym = cfg.symmetry if cfg.enforce_symmetry else None
    if sym is not None:
        u = sym.symmetrize(u, data.space)
    state = _finish_state(u, 0.0, 0.0, data, cfg.overflow_cap)
    cfg.validate(state.grad_norm if state.grad_norm > 0 else None)

    traj = Trajectory()
    qscale = max(1.0, abs(data.q_integral))
    sqV = math.sqrt(data.space.V)

    def record(st, h, shift):
        traj.rows.append((st.t, st.E, st.N, st.u[0] / sqV, st.grad_norm, h_norm(st.u, data),
                          st.dissipation, h, shift))
        traj.states.append(st.u.copy())

    record(state, 0.0, shift0)
    if state.grad_norm == 0.0:
        traj.converged, traj.reason = True, "stationary initial data"
        return traj

    h = cfg.fixed_step or min(cfg.initial_step, cfg.max_step)
    err_prev = 1.0
    below = 0
    nsteps = 0
    while state.t < cfg.max_time - 1e-14:
        if nsteps >= cfg.max_steps:
            break
        h = min(h, cfg.max_time - state.t)
        trial, err = step(state, h, data, cfg)
        accept = cfg.fixed_step is not None or err <= 1.0
        if accept:
            n_before = constraint_N(trial.u, data, cfg.overflow_cap)
            drift = abs(n_before - data.q_integral) / qscale
            u_new, shift = project_to_X(trial.u, data)
            if sym is not None:
                u_new = sym.symmetrize(u_new, data.space)
            new_state = _finish_state(u_new, trial.t, trial.dissipation, data, cfg.overflow_cap)
            if new_state.E > state.E + cfg.monotone_tol * max(1.0, abs(state.E)):
                if cfg.fixed_step is not None:
                    raise NumericalAbort(
                        f"energy increased at t = {trial.t:.6g} with fixed step {h:g}")
                accept = False
                err = max(err, 2.0)
        if accept:
            traj.drift.append(drift)
            state = new_state
            nsteps += 1
            record(state, h, shift)
            if callback is not None and callback(state):
                traj.reason = "stopped by monitor"
                break
            below = below + 1 if state.grad_norm < cfg.grad_tol else 0
            if below >= cfg.stagnation_window:
                traj.converged, traj.reason = True, "gradient below tolerance"
                break
            if cfg.fixed_step is None:
                e = max(err, 1e-10)
                fac = cfg.safety * e ** (-0.7 / 5) * err_prev ** (0.4 / 5)
                h = min(cfg.max_step, h * min(5.0, max(0.2, fac)))
                err_prev = e
        else:
            traj.rejected += 1
            h *= max(0.1, cfg.safety * err ** (-1 / 5))
            if h < cfg.min_step:
                raise StepUnderflowError(f"step size {h:.3e} below floor at t = {state.t:.6g}")
    if not traj.converged and traj.reason != "stopped by monitor":
        traj.reason = "max time reached" if state.t >= cfg.max_time - 1e-14 else "step budget exhausted"
        if cfg.raise_on_nonconvergence:
            raise NonConvergence(f"flow did not converge: {traj.reason}; "
                                 f"|grad^X E| = {state.grad_norm:.3e}")
    return traj


# ---------------------------------------------------------------------------
# end-state analysis
# ---------------------------------------------------------------------------

def classify_zero_regime(u_inf, data: CurvatureData, tiny: float = 1e-10) -> dict:
    """delta = sign(lambda) and the equation satisfied by v = u + 1/2 ln|lambda|."""
    lam = lambda_multiplier(u_inf, data)
    delta = 0 if abs(lam) < tiny else int(np.sign(lam))
    out = {"lambda": lam, "delta": delta}
    if delta != 0:
        v = np.array(u_inf, dtype=float)
        v[0] += 0.5 * math.log(abs(lam)) * math.sqrt(data.space.V)
        r = _mu(data) * v + data.qbar - delta * gamma_fe2u(v, data)
        out["v"] = v
        out["shifted_residual"] = float(np.linalg.norm(r))
    return out


def summary(traj: Trajectory, data: CurvatureData) -> dict:
    u = traj.final
    res, lam = residual(u, data)
    return {"regime": data.regime, "label": data.label, "converged": traj.converged,
            "reason": traj.reason, "t_final": float(traj.rows[-1][0]),
            "E_final": float(traj.rows[-1][1]), "grad_norm": float(traj.rows[-1][4]),
            "lambda": lam, "residual": res, "accepted_steps": len(traj.rows) - 1,
            "rejected_steps": traj.rejected,
            "max_drift": float(max(traj.drift)) if traj.drift else 0.0}

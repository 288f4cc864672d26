"""Exponential-class inequalities on S^3 checked numerically.

* Beckner-Onofri:  (1/16 pi^2) int u P'bar u  >=  ln avg e^{2(u - ubar)}
* Adams-type bound:  int exp(A |u - ubar|^2 / ||Delta_b u||^2)
* improved Moser-Trudinger functional on centred fields:
      a int u P'bar u + 2 avg(u) - ln int e^{2u}
* N_m: fewest weighted points annihilating every mean-zero real polynomial
  of degree <= m on S^3.

Bubbles are the mean-zeroed profiles 1/2 ln J(h_{p,r}); their norms have
closed forms in |a| = tanh(ln r), which the sweeps use in place of truncated
expansions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .basis import PluriSpace
from .errors import NonConvergence, OverflowGuardError, ValidationError
from .mobius import SphereAutomorphism, bubble_coefficients, center, half_log_jacobian
from .operators import CRITICAL_MASS, multiplier_values, quadratic_form, sublaplacian_norm_sq


@dataclass
class DeficitReport:
    value: float
    terms: dict
    descriptor: str = ""
    rows: list = field(default_factory=list)

    @property
    def minimum(self) -> float:
        vals = [r["value"] for r in self.rows if r.get("value") is not None]
        return min(vals) if vals else self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "terms": self.terms, "descriptor": self.descriptor,
                "rows": self.rows}


# ---------------------------------------------------------------------------
# bubble closed forms
# ---------------------------------------------------------------------------

def _a2(r: float) -> float:
    return math.tanh(math.log(r)) ** 2


def bubble_quadratic_form(r: float, V: float) -> float:
    """int u P'bar u for u = 1/2 ln J(h_{p,r}):  8V sum |a|^{2j}/j = -8V ln(1 - |a|^2)."""
    return -8.0 * V * math.log1p(-_a2(r))


def bubble_sublaplacian_norm_sq(r: float, V: float, tol: float = 1e-17) -> float:
    """||Delta_b u||^2 = 2V sum_j |a|^{2j} / (j + 1)."""
    t = _a2(r)
    if t == 0.0:
        return 0.0
    # sum_{j>=1} t^j/(j+1) = (-ln(1-t) - t)/t
    return 2.0 * V * (-math.log1p(-t) - t) / t


def bubble_grid_values(space: PluriSpace, p, r: float, mean_zero: bool = True) -> np.ndarray:
    h = SphereAutomorphism(p, r)
    v = half_log_jacobian(h, space.grid.z1, space.grid.z2)
    if mean_zero:
        v = v - math.log1p(-_a2(r))      # the mean of 1/2 ln J is ln(1 - |a|^2)
    return v


# ---------------------------------------------------------------------------
# Beckner-Onofri
# ---------------------------------------------------------------------------

def _log_avg_exp(values, space: PluriSpace, cap: float = 40.0) -> float:
    m = 2.0 * float(np.max(values))
    if m > 2 * cap:
        raise OverflowGuardError(f"max 2(u - ubar) = {m:.1f} beyond the overflow cap")
    return m + math.log(space.integrate(np.exp(2.0 * values - m)) / space.V)


def beckner_onofri_deficit(u, space: PluriSpace, values=None, quadratic=None,
                           descriptor: str = "") -> DeficitReport:
    """(1/16 pi^2) int u P'bar u - ln avg e^{2(u - ubar)} (u mean-zeroed first).

    ``values``/``quadratic`` let callers pass exact grid values and the exact
    quadratic form for fields that are not band-limited.
    """
    if values is None:
        c = np.array(u, dtype=float)
        c[0] = 0.0
        g = space.synthesize(c)
    else:
        g = np.asarray(values, dtype=float)
        g = g - space.integrate(g) / space.V
    q = quadratic_form(u, space) if quadratic is None else float(quadratic)
    lhs = q / CRITICAL_MASS
    rhs = _log_avg_exp(g, space)
    return DeficitReport(lhs - rhs, {"quadratic": lhs, "log_average": rhs}, descriptor)


def bubble_beckner_onofri(space: PluriSpace, p, r: float) -> DeficitReport:
    """Deficit on the mean-zeroed bubble, evaluated from closed forms on the grid."""
    return beckner_onofri_deficit(None, space, values=bubble_grid_values(space, p, r),
                                  quadratic=bubble_quadratic_form(r, space.V),
                                  descriptor=f"bubble r={r:g}")


def bubble_jacobian_profile_deficit(space: PluriSpace, p, r: float) -> DeficitReport:
    """Same functional on u = J(h) itself (the other candidate normalisation)."""
    h = SphereAutomorphism(p, r)
    J = np.exp(2.0 * half_log_jacobian(h, space.grid.z1, space.grid.z2))
    c = space.analyze(J)      # J(h) is not pluriharmonic; use its projection throughout
    return beckner_onofri_deficit(c, space, descriptor=f"J(h) r={r:g}")


def random_deficit_sweep(space: PluriSpace, n: int = 500, max_norm: float = 5.0,
                         seed: int = 0) -> DeficitReport:
    """Random pluriharmonic fields with H-norm uniformly in (0, max_norm]."""
    rng = np.random.default_rng(seed)
    mu = multiplier_values(space)
    rows = []
    for k in range(n):
        c = space.random_field(rng, decay=1.5)
        c[0] = 0.0
        hn = math.sqrt(float(np.dot((mu + 1.0) * c, c)))
        c *= rng.uniform(0.0, max_norm) / hn
        d = beckner_onofri_deficit(c, space)
        rows.append({"sample": k, "norm": float(math.sqrt(np.dot((mu + 1) * c, c))),
                     "value": d.value})
    mn = min(r["value"] for r in rows)
    return DeficitReport(mn, {"samples": n, "max_norm": max_norm}, "random sweep", rows)


# ---------------------------------------------------------------------------
# Adams
# ---------------------------------------------------------------------------

ADAMS_EXPONENT = 32.0


def adams_ratio(u, space: PluriSpace, A: float = ADAMS_EXPONENT, values=None,
                lap_norm_sq=None) -> float:
    """int exp(A |u - ubar|^2 / ||Delta_b u||^2)."""
    n2 = sublaplacian_norm_sq(u, space) if lap_norm_sq is None else float(lap_norm_sq)
    if not n2 > 1e-20:
        raise ValidationError("adams_ratio is undefined for constant u (||Delta_b u|| = 0)")
    g = space.synthesize(u) if values is None else np.asarray(values, dtype=float)
    g = g - space.integrate(g) / space.V
    expo = A * g * g / n2
    m = float(expo.max())
    if m > 700:
        raise OverflowGuardError(f"Adams exponent reaches {m:.1f}")
    return space.integrate(np.exp(expo))


def bubble_adams_ratio(space: PluriSpace, p, r: float, A: float = ADAMS_EXPONENT) -> float:
    """Adams integral on the bubble family; r = 1 uses the limit profile 2 Re <zeta, p>.

    (The bubble divided by tanh(ln r) tends to 2 Re <zeta, p> as r -> 1, and the
    integrand is invariant under u -> c u.)
    """
    if r == 1.0:
        p = np.asarray(p, dtype=complex)
        p = p / np.linalg.norm(p)
        g = 2.0 * (space.grid.z1 * np.conj(p[0]) + space.grid.z2 * np.conj(p[1])).real
        n2 = 2.0 * space.V / 2.0          # 2V |p|^2 / (1 + 1)
        return adams_ratio(None, space, A, values=g, lap_norm_sq=n2)
    return adams_ratio(None, space, A, values=bubble_grid_values(space, p, r),
                       lap_norm_sq=bubble_sublaplacian_norm_sq(r, space.V))


def adams_sweep(space: PluriSpace, p, radii=(1, 2, 4, 8), exponents=(32.0, 64.0)) -> list:
    rows = []
    for A in exponents:
        for r in radii:
            rows.append({"A": A, "r": r, "value": bubble_adams_ratio(space, p, float(r), A)})
    return rows


# ---------------------------------------------------------------------------
# improved Moser-Trudinger on centred fields
# ---------------------------------------------------------------------------

IMPROVED_THRESHOLD = 1.0 / 256.0


def improved_mt_functional(quadratic: float, values, space: PluriSpace, a: float) -> float:
    """a int u P'bar u + 2 avg(u) - ln int e^{2u} from the quadratic form and grid values."""
    g = np.asarray(values, dtype=float)
    m = float(g.max())
    return (a * quadratic + 2.0 * space.integrate(g) / space.V
            - (2.0 * m + math.log(space.integrate(np.exp(2.0 * (g - m))))))


def improved_mt_scan(a: float, space: PluriSpace, p=(1.0, 0.0), radii=(1, 2, 4, 8),
                     perturbation=None) -> DeficitReport:
    """Bubbles (plus an optional fixed low-degree perturbation) centred and uncentred.

    For the centred member v = u o h + 1/2 ln J(h) the quadratic form comes from
    the Moebius invariance of int u P'bar u + 2 int R^2 u (R^2 = Q' = 4 here):
    int v P'bar v = int u P'bar u + 8 (int u - int v).
    """
    p = np.asarray(p, dtype=complex)
    pert = np.zeros(space.dim) if perturbation is None else np.asarray(perturbation, dtype=float)
    mu = multiplier_values(space)
    rows = []
    pts = np.stack([space.grid.z1.reshape(-1), space.grid.z2.reshape(-1)], axis=-1)
    for r in radii:
        r = float(r)
        hb = SphereAutomorphism(p, r)
        # u = bubble (not mean-zeroed) + perturbation; bubble-perturbation cross
        # terms only involve the low modes of the perturbation
        bc = bubble_coefficients(space, p, r)
        quad = (bubble_quadratic_form(r, space.V) + 2.0 * float(np.dot(mu * bc, pert))
                + float(np.dot(mu * pert, pert)))
        u_vals = half_log_jacobian(hb, space.grid.z1, space.grid.z2) + space.synthesize(pert)
        row = {"r": r, "uncentered": improved_mt_functional(quad, u_vals, space, a)}
        try:
            res = center(None, space, values=u_vals)
        except NonConvergence as exc:
            row.update(centered=None, skipped=str(exc))
            rows.append(row)
            continue
        h = res.h
        hz = h(pts)
        v = (half_log_jacobian(hb, hz[:, 0], hz[:, 1])
             + space.evaluate(pert, hz[:, 0], hz[:, 1])).reshape(space.grid.shape)
        v = v + half_log_jacobian(h, space.grid.z1, space.grid.z2)
        quad_v = quad + 8.0 * (space.integrate(u_vals) - space.integrate(v))
        row.update(centered=improved_mt_functional(quad_v, v, space, a),
                   center_r=res.r, center_residual=res.residual)
        rows.append(row)
    vals = [r["centered"] for r in rows if r.get("centered") is not None]
    return DeficitReport(min(vals) if vals else float("nan"),
                         {"a": a, "threshold": IMPROVED_THRESHOLD}, "centred bubble family", rows)


# ---------------------------------------------------------------------------
# N_m
# ---------------------------------------------------------------------------

@dataclass
class PointConfiguration:
    points: np.ndarray      # (N, 2) complex, on S^3
    weights: np.ndarray     # (N,), positive, sum 1

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be positive and sum to 1")
        if np.abs(np.linalg.norm(self.points, axis=1) - 1.0).max() > 1e-12:
            raise ValidationError("points must lie on S^3")

    def rotate(self, U) -> "PointConfiguration":
        return PointConfiguration(self.points @ np.asarray(U).T, self.weights)


def moment_exponents(m: int) -> list:
    """(a1, a2, b1, b2) with 1 <= a1+a2+b1+b2 <= m."""
    out = []
    for e in itertools.product(range(m + 1), repeat=4):
        if 1 <= sum(e) <= m:
            out.append(e)
    return out


def _exact_mean(e) -> complex:
    a1, a2, b1, b2 = e
    if a1 != b1 or a2 != b2:
        return 0.0
    return math.factorial(a1) * math.factorial(a2) / math.factorial(a1 + a2 + 1)


def _moment_tables(m: int):
    E = np.array(moment_exponents(m), dtype=int)
    means = np.array([_exact_mean(tuple(e)) for e in E], dtype=float)
    return E, means


def _moments(z1, z2, w, E, means) -> np.ndarray:
    vals = (z1[:, None] ** E[:, 0] * z2[:, None] ** E[:, 1]
            * np.conj(z1)[:, None] ** E[:, 2] * np.conj(z2)[:, None] ** E[:, 3])
    s = w @ vals - means
    return np.concatenate([s.real, s.imag])


def moment_residual(config: PointConfiguration, m: int) -> np.ndarray:
    """Real and imaginary parts of sum nu_k f(x_k) over the mean-subtracted monomials."""
    E, means = _moment_tables(m)
    return _moments(config.points[:, 0], config.points[:, 1], config.weights, E, means)


def _unpack(x, N):
    P = x[:4 * N].reshape(N, 4)
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    w = np.exp(x[4 * N:] - x[4 * N:].max())
    w = w / w.sum()
    return P[:, 0] + 1j * P[:, 1], P[:, 2] + 1j * P[:, 3], w


@dataclass
class NmResult:
    m: int
    N: int
    feasible: bool
    residual: float
    config: PointConfiguration | None
    starts: int

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible at confidence level"


def nm_solver(m: int, N: int, starts: int = 100, seed: int = 0, tol: float = 1e-10) -> NmResult:
    """Nonlinear least squares over N points and weights, multi-started."""
    if m not in (1, 2):
        raise ValidationError("m must be 1 or 2")
    if not 1 <= N <= 8:
        raise ValidationError("N must lie in 1..8")
    rng = np.random.default_rng(seed)

    E, means = _moment_tables(m)

    def fun(x):
        return _moments(*_unpack(x, N), E, means)

    best = (np.inf, None)
    for k in range(starts):
        x0 = np.concatenate([rng.normal(size=4 * N), 0.1 * rng.normal(size=N)])
        sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        r = float(np.linalg.norm(sol.fun, np.inf))
        if r < best[0]:
            best = (r, sol.x)
        if r < tol:
            break
    z1, z2, w = _unpack(best[1], N)
    try:
        config = PointConfiguration(np.stack([z1, z2], axis=1), w)
    except ValidationError:
        config = None
    return NmResult(m, N, best[0] < tol, best[0], config, k + 1)


def minimal_n(m: int, n_max: int = 8, **kw) -> int | None:
    for N in range(1, n_max + 1):
        if nm_solver(m, N, **kw).feasible:
            return N
    return None

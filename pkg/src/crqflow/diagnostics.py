"""Post-hoc checks on trajectories: energy identity, rate fits, lemma monitors,
concentration scans and the critical-threshold test.

None of these functions modify the trajectory they are given.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .basis import PluriSpace
from .errors import ValidationError
from .gauge import GAUGE_TAG, GaugeDistance, gauge_distance, random_sphere_points  # noqa: F401
from .operators import CRITICAL_MASS, CurvatureData, multiplier_values

MIN_BALL_NODES = 50


# ---------------------------------------------------------------------------
# energy identity
# ---------------------------------------------------------------------------

def energy_identity_check(traj) -> float:
    """|D(t) - (E(u0) - E(u(t)))| / |E(u0) - E(u(t))| at the final time.

    Returns 0 for a trajectory that never moved.
    """
    E = traj.column("E")
    D = traj.column("dissipation")
    drop = E[0] - E[-1]
    if drop == 0.0:
        return 0.0 if D[-1] == 0.0 else math.inf
    return float(abs(D[-1] - drop) / abs(drop))


# ---------------------------------------------------------------------------
# rate fit
# ---------------------------------------------------------------------------

@dataclass
class RateFit:
    B: float
    beta: float
    window: tuple
    residual: float
    super_polynomial: bool
    beta_by_window: dict
    points: int

    @property
    def verdict(self) -> str:
        if self.super_polynomial:
            return "converged faster than any power"
        return "converged with rate" if self.beta > 0 else "no rate"


def _loglog(t, d):
    X = np.log1p(t)
    Y = np.log(d)
    A = np.stack([np.ones_like(X), -X], axis=1)
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - Y) ** 2)))
    return float(math.exp(coef[0])), float(coef[1]), res


def rate_fit_series(t, d, window: float = 0.5, min_points: int = 30) -> RateFit:
    """Fit d(t) ~ B (1 + t)^(-beta) on the last ``window`` fraction of the samples."""
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = d > 0
    t, d = t[keep], d[keep]
    if t.size < min_points:
        raise ValidationError(f"rate_fit needs at least {min_points} checkpoints (got {t.size})")
    betas = {}
    for w in (0.75, 0.5, 0.25):
        n = max(int(round(w * t.size)), 5)
        betas[w] = _loglog(t[-n:], d[-n:])[1]
    n = max(int(round(window * t.size)), 5)
    B, beta, res = _loglog(t[-n:], d[-n:])
    vals = np.array(list(betas.values()))
    spread = float(np.ptp(vals) / max(abs(np.median(vals)), 1e-300))
    # a power law gives the same exponent on every tail window; exponential
    # decay makes the apparent exponent grow as the window moves later
    superpoly = bool(spread > 0.2 and betas[0.25] > betas[0.75])
    return RateFit(B, beta, (float(t[-n]), float(t[-1])), res, superpoly, betas, int(t.size))


def rate_fit(traj, data: CurvatureData, u_inf=None, window: float = 0.5,
             noise_floor: float = 1e-9) -> RateFit:
    """Rate fit of ||u(t) - u_inf||_H with u_inf the final state by default.

    Samples whose distance is below ``noise_floor`` times the initial
    distance are dropped (they sit at the solver tolerance).
    """
    u_inf = traj.final if u_inf is None else np.asarray(u_inf)
    w = multiplier_values(data.space) + 1.0
    t = traj.times
    d = np.array([math.sqrt(float(np.dot(w * (u - u_inf), u - u_inf))) for u in traj.states])
    ok = d > noise_floor * max(d[0], 1e-300)
    return rate_fit_series(t[ok], d[ok], window)


# ---------------------------------------------------------------------------
# concentration
# ---------------------------------------------------------------------------

def concentration_scan(u, space: PluriSpace, f_values, centers, radii, values=None) -> dict:
    """Masses int_{B_r(p)} f e^{2u} over gauge balls, plus the total.

    ``f_values`` is f on the grid; ``values`` optionally supplies u on the grid.
    """
    g = space.synthesize(u) if values is None else np.asarray(values)
    dens = np.asarray(f_values) * np.exp(2.0 * g)
    W = space.grid.weights
    z1, z2 = space.grid.z1, space.grid.z2
    rows = []
    for p in centers:
        p = np.asarray(p, dtype=complex)
        p = p / np.linalg.norm(p)
        d = gauge_distance(z1, z2, p[0], p[1])
        for r in radii:
            mask = d < r
            nodes = int(mask.sum())
            if nodes < MIN_BALL_NODES:
                warnings.warn(f"ball of radius {r:g} holds only {nodes} grid nodes "
                              f"(< {MIN_BALL_NODES}); mass is under-resolved", RuntimeWarning)
            rows.append({"center": [p[0].real, p[0].imag, p[1].real, p[1].imag],
                         "radius": float(r), "mass": float(np.sum(W * dens * mask)),
                         "nodes": nodes})
    return {"rows": rows, "total": float(np.sum(W * dens)), "gauge": GAUGE_TAG}


def ball_volume_monte_carlo(p, r: float, V: float, n: int = 400000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    x = random_sphere_points(rng, n)
    p = np.asarray(p, dtype=complex)
    p = p / np.linalg.norm(p)
    return V * float(np.mean(gauge_distance(x[:, 0], x[:, 1], p[0], p[1]) < r))


def peak_mass(u, space: PluriSpace, f_values, radius: float, values=None) -> dict:
    """Mass in the ball of given radius around the grid maximum of f e^{2u}."""
    g = space.synthesize(u) if values is None else np.asarray(values)
    dens = np.asarray(f_values) * np.exp(2.0 * g)
    i = np.unravel_index(int(np.argmax(dens)), dens.shape)
    p = np.array([space.grid.z1[i], space.grid.z2[i]])
    scan = concentration_scan(None, space, f_values, [p], [radius], values=g)
    out = dict(scan["rows"][0])
    out["fraction_of_critical"] = out["mass"] / CRITICAL_MASS
    return out


# ---------------------------------------------------------------------------
# lemma monitors
# ---------------------------------------------------------------------------

def _sublevel_mask(data: CurvatureData, K):
    if K is None:
        lo = data.f_range()[0]
        if not lo < 0:
            raise ValidationError("default K = {f <= inf f / 2} needs inf f < 0; pass an explicit cap")
        return data.f_grid() <= 0.5 * lo
    p, r = K
    p = np.asarray(p, dtype=complex)
    p = p / np.linalg.norm(p)
    return gauge_distance(data.space.grid.z1, data.space.grid.z2, p[0], p[1]) < r


def lemma_monitors(traj, data: CurvatureData, K=None, bound_2r: float | None = None) -> dict:
    """Both sides of the average and exponential bounds along a run.

    K is a sublevel set of f by default, or an explicit cap (p, radius).
    The reported constants are the smallest that make each bound hold on
    the recorded states.
    """
    space = data.space
    mask = _sublevel_mask(data, K)
    W = space.grid.weights
    volK = float(np.sum(W * mask))
    if volK <= 0:
        raise ValidationError("Vol(K) = 0")
    V = space.V
    mu = multiplier_values(space)
    u0 = traj.states[0]
    u0_norm2 = float(np.dot((mu + 1.0) * u0, u0))
    E0 = traj.rows[0][1]
    rows = []
    for st, row in zip(traj.states, traj.rows):
        g = space.synthesize(st)
        e2u = np.exp(2.0 * g)
        rows.append({"t": row[0], "int_u": float(np.sum(W * g)), "int_K_u": float(np.sum(W * g * mask)),
                     "int_e2u": float(np.sum(W * e2u)), "int_K_e2u": float(np.sum(W * e2u * mask)),
                     "ubar": float(np.sum(W * g)) / V})
    # average bound: int u <= |E0| + C/Vol(K) + (4V/Vol(K)) max(int_K u, 0)
    C41 = max(0.0, max(volK * (r["int_u"] - abs(E0)) - 4 * V * max(r["int_K_u"], 0.0) for r in rows))
    # exponential bound with alpha = 1
    CK = max(r["int_e2u"] / (math.exp(u0_norm2) * max(r["int_K_e2u"], 1.0)) for r in rows)
    jensen = max(math.exp(2 * r["ubar"]) - r["int_e2u"] / V for r in rows)
    out = {"rows": rows, "vol_K": volK, "u0_norm_sq": u0_norm2, "E0": E0,
           "average_bound_C": C41, "exponential_bound_C_K": CK, "alpha": 1.0,
           "jensen_max_violation": jensen,
           "tau_chain": "tau = alpha (C + 1) - C (constants not explicit)"}
    if bound_2r is not None:
        out["bound_2r"] = bound_2r
        out["bound_2r_holds"] = all(r["int_e2u"] <= 2 * bound_2r for r in rows)
    out["verdict"] = "consistent" if all(math.isfinite(x) for x in (C41, CK)) and jensen <= 1e-12 * max(
        1.0, max(r["int_e2u"] / V for r in rows)) else "inconsistent"
    return out


# ---------------------------------------------------------------------------
# critical threshold
# ---------------------------------------------------------------------------

def critical_threshold_check(u0, data: CurvatureData, fixed) -> dict:
    """sup over Sigma of f against exp(-E(u0) / 16 pi^2)."""
    from .flow import energy
    E0 = energy(u0, data)
    rhs = math.exp(-E0 / CRITICAL_MASS)
    if fixed.empty:
        return {"satisfied": True, "sup_f_on_sigma": None, "threshold": rhs, "E0": E0,
                "sigma": "empty"}
    pts = fixed.samples
    sup = float(np.max(data.space.evaluate(data.f, pts[:, 0], pts[:, 1])))
    return {"satisfied": sup <= rhs, "sup_f_on_sigma": sup, "threshold": rhs, "E0": E0,
            "sigma": fixed.describe()}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "__dataclass_fields__"):
        return _plain(asdict(x))
    return x


def report_json(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, sort_keys=True)


def report_text(report: dict) -> str:
    flat = {k: v for k, v in _plain(report).items() if not isinstance(v, (list, dict))}
    w = max((len(k) for k in flat), default=0)
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in sorted(flat.items()))

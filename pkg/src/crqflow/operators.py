"""Gamma, the projected Paneitz-type operator P'bar, Q'bar data, the l-solver and the Green's function.

Everything here is a diagonal operation on pluriharmonic coefficients.  The
multiplier of P'bar on each degree is *derived*: the operator formula is
applied to exact representative polynomials and the scalar is read off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

from .basis import BasisTable, PluriSpace
from .errors import NumericalAbort, ValidationError
from .frame import apply_vector_field, frame_constants, pprime, sublaplacian
from .gauge import gauge_distance, random_sphere_points
from .polynomial import CQ, HarmonicPolynomial
from .quadrature import build_quadrature

CRITICAL_MASS = 16.0 * math.pi ** 2
MULTIPLIER_GUARD = 1e-13


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------

def gamma_project(c, basis: BasisTable) -> np.ndarray:
    """Zero every coefficient outside bidegrees (j, 0) and (0, k)."""
    c = np.asarray(c, dtype=float)
    return np.where(basis.pluri_mask, c, 0.0)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

def _pluri_representatives(j: int, exhaustive: bool):
    a_values = range(j, -1, -1) if exhaustive else sorted({j, j // 2, 0})
    for a in a_values:
        m = HarmonicPolynomial.monomial(a, j - a)
        yield m.real_part()
        yield m.imag_part()


@lru_cache(maxsize=None)
def pprime_eigenvalue(j: int) -> Fraction:
    """Scalar by which P' acts on real pluriharmonic polynomials of degree j.

    Applied symbolically to representatives (all of them for j <= 12);
    raises if the action is not scalar.
    """
    if j == 0:
        reps = [HarmonicPolynomial.constant(1)]
    else:
        reps = list(_pluri_representatives(j, exhaustive=j <= 12))
    value = None
    for f in reps:
        out = pprime(f)
        e, c = next(iter(f.terms.items()))
        lam = out.terms.get(e, CQ(0)) / c
        if lam.im != 0 or not out.equals_on_sphere(f * lam):
            raise NumericalAbort(f"P' does not act as a scalar on degree {j}")
        if value is not None and lam.re != value:
            raise NumericalAbort(f"P' has two different eigenvalues on degree {j}")
        value = lam.re
    return value


@lru_cache(maxsize=None)
def sublaplacian_eigenvalue(j: int, k: int = 0) -> Fraction:
    """Eigenvalue of Delta_b on H_{j,k}, read off z1^j zb2^k (which lies in H_{j,k})."""
    p = HarmonicPolynomial.monomial(j, 0, 0, k)
    out = sublaplacian(p)
    lam = out.terms.get((j, 0, 0, k), CQ(0))
    if lam.im != 0 or not (out - p * lam).is_zero():
        raise NumericalAbort(f"z1^{j} zb2^{k} is not a Delta_b eigenfunction")
    return lam.re


def pprime_rayleigh(j: int, grid=None) -> float:
    """Quadrature Rayleigh quotient <phi, P' phi> / <phi, phi> for phi = Re z1^j.

    Uses the integrated-by-parts form 4 ||Delta_b phi||^2 + 4 R ||Z1 phi||^2, so
    no fourth-order derivative is read off symbolically.
    """
    fc = frame_constants()
    grid = grid or build_quadrature(2 * j + 2)
    phi = HarmonicPolynomial.monomial(j).real_part()
    z1, z2 = grid.z1, grid.z2
    f = phi.evaluate(z1, z2).real
    lap = sublaplacian(phi).evaluate(z1, z2).real
    zphi = apply_vector_field(phi, "Z1").evaluate(z1, z2)
    num = 4 * grid.integrate(lap ** 2) + 4 * float(fc.webster_curvature) / float(fc.levi) \
        * grid.integrate(np.abs(zphi) ** 2)
    return num / grid.integrate(f ** 2)


@dataclass(frozen=True)
class SpectralMultiplier:
    """Diagonal operator data: one value per basis element."""

    values: np.ndarray
    name: str = ""

    @property
    def lambda1(self) -> float:
        pos = self.values[self.values > 0]
        return float(pos.min()) if pos.size else float("nan")

    def apply(self, c) -> np.ndarray:
        return self.values * np.asarray(c)


def pprime_multiplier(space) -> SpectralMultiplier:
    """P'bar multiplier on a :class:`PluriSpace` or a :class:`BasisTable`.

    On a full basis table P'bar is taken as Gamma P' Gamma, so elements of
    mixed bidegree get 0.
    """
    if isinstance(space, PluriSpace):
        mu = np.array([float(pprime_eigenvalue(int(j))) for j in space.degree])
    elif isinstance(space, BasisTable):
        mu = np.array([float(pprime_eigenvalue(e.bidegree.j)) if e.pluriharmonic else 0.0
                       for e in space.elements])
    else:
        raise ValidationError("expected a PluriSpace or BasisTable")
    nonconst = np.ones(mu.size, dtype=bool)
    nonconst[0] = False
    if isinstance(space, BasisTable):
        nonconst &= space.pluri_mask
    if np.any(np.abs(mu[nonconst]) < MULTIPLIER_GUARD):
        raise NumericalAbort("vanishing P'bar multiplier on a nonconstant pluriharmonic mode")
    return SpectralMultiplier(mu, "P'bar")


def sublaplacian_multiplier(space: PluriSpace) -> SpectralMultiplier:
    return SpectralMultiplier(np.array([float(sublaplacian_eigenvalue(int(j))) for j in space.degree]),
                              "Delta_b")


@lru_cache(maxsize=None)
def _cached_mu(J: int) -> np.ndarray:
    return np.array([float(pprime_eigenvalue(j)) for j in range(J + 1)])


def multiplier_values(space: PluriSpace) -> np.ndarray:
    """P'bar multiplier per coefficient (fast path, cached per degree)."""
    return _cached_mu(space.J)[space.degree]


def pprime_apply(c, space: PluriSpace) -> np.ndarray:
    return multiplier_values(space) * np.asarray(c)


def resolvent_apply(c, space: PluriSpace) -> np.ndarray:
    """(P'bar + I)^{-1} c."""
    return np.asarray(c) / (multiplier_values(space) + 1.0)


def quadratic_form(c, space: PluriSpace) -> float:
    """int u P'bar u."""
    c = np.asarray(c)
    return float(np.dot(c, multiplier_values(space) * c))


def sublaplacian_norm_sq(c, space: PluriSpace) -> float:
    """||Delta_b u||^2 from the exact Delta_b eigenvalues."""
    lam = sublaplacian_multiplier(space).values
    return float(np.sum((lam * np.asarray(c)) ** 2))


# ---------------------------------------------------------------------------
# curvature data
# ---------------------------------------------------------------------------

def coeffs_to_triples(c, space: PluriSpace, tol: float = 0.0):
    """Serialise coefficients as (constant value, [(j, idx, coef), ...]).

    ``idx`` runs over 0 .. 2j+1 inside degree j in storage order.
    """
    c = np.asarray(c, dtype=float)
    const = space.mean(c)
    triples = []
    start = 1
    for j in range(1, space.J + 1):
        n = 2 * (j + 1)
        for idx in range(n):
            v = c[start + idx]
            if abs(v) > tol:
                triples.append((j, idx, float(v)))
        start += n
    return const, triples


def triples_to_coeffs(const: float, triples, space: PluriSpace) -> np.ndarray:
    c = space.constant(const)
    for j, idx, v in triples:
        j, idx = int(j), int(idx)
        if j < 1 or j > space.J or not 0 <= idx < 2 * (j + 1):
            raise ValidationError(f"mode (j={j}, idx={idx}) outside the basis of degree <= {space.J}")
        c[1 + j * (j + 1) - 2 + idx] = v
    return c


@dataclass
class CurvatureData:
    """Prescribed Q'bar and target f, both pluriharmonic coefficient vectors."""

    space: PluriSpace
    qbar: np.ndarray
    f: np.ndarray
    label: str = "synthetic"
    _fcache: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def q_integral(self) -> float:
        return self.space.mean(self.qbar) * self.space.V

    @property
    def regime(self) -> str:
        q = self.q_integral
        if abs(q) <= 1e-12 * CRITICAL_MASS:
            return "zero"
        if q < 0:
            return "negative"
        if abs(q - CRITICAL_MASS) <= 1e-10 * CRITICAL_MASS:
            return "critical"
        return "positive"

    def f_grid(self) -> np.ndarray:
        key = self.f.tobytes()
        if self._fcache is None or self._fcache[0] != key:
            self._fcache = (key, self.space.synthesize(self.f))
        return self._fcache[1]

    def f_range(self):
        g = self.f_grid()
        return float(g.min()), float(g.max())

    def check_hypotheses(self) -> None:
        """Sign conditions on f matching the regime; raises ValidationError."""
        q = self.q_integral
        if q > CRITICAL_MASS * (1 + 1e-10):
            raise ValidationError(f"int Q'bar = {q:.6g} exceeds 16 pi^2")
        lo, hi = self.f_range()
        regime = self.regime
        if regime == "negative" and not lo < 0:
            raise ValidationError(f"hypothesis (i) violated: inf f >= 0 (inf f = {lo:.6g})")
        if regime == "zero" and not (hi > 0 and lo < 0):
            raise ValidationError(
                f"hypothesis (ii) violated: need sup f > 0 > inf f (got {lo:.6g}, {hi:.6g})")
        if regime in ("positive", "critical") and not hi > 0:
            raise ValidationError(f"hypothesis (iii) violated: sup f <= 0 (sup f = {hi:.6g})")

    def to_dict(self) -> dict:
        qc, qt = coeffs_to_triples(self.qbar, self.space)
        fc, ft = coeffs_to_triples(self.f, self.space)
        return {"label": self.label, "regime": self.regime, "J": self.space.J,
                "qbar": {"constant": qc, "modes": qt}, "f": {"constant": fc, "modes": ft}}

    @classmethod
    def from_dict(cls, d: dict, space: PluriSpace) -> "CurvatureData":
        q = triples_to_coeffs(d["qbar"]["constant"], d["qbar"]["modes"], space)
        f = triples_to_coeffs(d["f"]["constant"], d["f"]["modes"], space)
        return cls(space, q, f, d.get("label", "synthetic"))


def qprime_standard(space: PluriSpace, f=None) -> CurvatureData:
    """Q' of the standard sphere: 2 Delta_b R - 4|A|^2 + R^2 = R^2 (R constant, A = 0).

    Cross-checks R^2 V = 16 pi^2 and aborts on a mismatch.
    """
    fc = frame_constants()
    if not fc.torsion.is_zero():
        raise NumericalAbort("standard sphere expected to be torsion free")
    R = float(fc.webster_curvature)
    # Delta_b of the constant R vanishes identically
    q = R * R
    if abs(q * fc.volume / CRITICAL_MASS - 1.0) > 1e-10:
        raise NumericalAbort(f"normalisation mismatch: Q' V = {q * fc.volume!r} != 16 pi^2")
    qbar = space.constant(q)
    f = space.constant(q) if f is None else np.asarray(f, dtype=float)
    return CurvatureData(space, qbar, f, label="standard")


def synthetic_curvature(space: PluriSpace, qbar, f=None) -> CurvatureData:
    """Model-problem data; ``qbar`` may be a constant or a coefficient vector."""
    if np.isscalar(qbar):
        qbar = space.constant(float(qbar))
    qbar = np.asarray(qbar, dtype=float)
    data = CurvatureData(space, qbar, space.constant(1.0) if f is None else np.asarray(f, float))
    if data.q_integral > CRITICAL_MASS * (1 + 1e-10):
        raise ValidationError(f"int Q'bar = {data.q_integral:.6g} exceeds 16 pi^2")
    return data


def solve_ell(data: CurvatureData) -> np.ndarray:
    """The zero-mean pluriharmonic l with P'bar l + Q'bar = 0 (requires int Q'bar = 0)."""
    if abs(data.q_integral) > 1e-12 * max(1.0, float(np.linalg.norm(data.qbar))):
        raise ValidationError("int Q'bar != 0: the constant mode obstructs P'bar l = -Q'bar")
    mu = multiplier_values(data.space)
    ell = np.zeros_like(data.qbar)
    ell[1:] = -data.qbar[1:] / mu[1:]
    return ell


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

@dataclass
class GreenKernel:
    """G(., y) in coefficients: phi_i(y) / mu_i on nonconstant modes, 0 on the constant."""

    space: PluriSpace
    y: tuple
    coefficients: np.ndarray

    def __call__(self, z1, z2):
        return self.space.evaluate(self.coefficients, z1, z2)

    def pairing(self, psi) -> float:
        """<P'bar G(., y), psi> computed spectrally."""
        return float(np.dot(pprime_apply(self.coefficients, self.space), psi))


def basis_values(space: PluriSpace, z1, z2) -> np.ndarray:
    """All basis functions at the given points, shape (npoints, dim)."""
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    mono = (z1[:, None] ** space.mono_a) * (z2[:, None] ** space.mono_b)
    f = math.sqrt(2.0) / space.mono_norm
    out = np.empty((z1.size, space.dim))
    out[:, 0] = 1.0 / math.sqrt(space.V)
    out[:, 1::2] = f * mono.real
    out[:, 2::2] = f * mono.imag
    return out


def green_function(space: PluriSpace, y) -> GreenKernel:
    y = (complex(y[0]), complex(y[1]))
    vals = basis_values(space, y[0], y[1])[0]
    mu = multiplier_values(space)
    coef = np.zeros(space.dim)
    coef[1:] = vals[1:] / mu[1:]
    return GreenKernel(space, y, coef)


def green_log_fit(space: PluriSpace, y=(1.0, 0.0), shell=(0.5, 1.3), n: int = 4000,
                  seed: int = 0) -> dict:
    """Regress G(x, y) on ln d(x, y) over a gauge shell; returns slope and diagnostics."""
    lo, hi = shell
    if hi / lo < 1.5:
        raise ValidationError("gauge shell too narrow for a stable log fit")
    G = green_function(space, y)
    rng = np.random.default_rng(seed)
    pts = random_sphere_points(rng, 8 * n)
    d = gauge_distance(pts[:, 0], pts[:, 1], y[0], y[1])
    keep = (d >= lo) & (d <= hi)
    pts, d = pts[keep][:n], d[keep][:n]
    g = G(pts[:, 0], pts[:, 1])
    A = np.stack([np.log(d), np.ones_like(d)], axis=1)
    (slope, icpt), res, *_ = np.linalg.lstsq(A, g, rcond=None)
    resid = g - A @ np.array([slope, icpt])
    return {"slope": float(slope), "intercept": float(icpt),
            "target": -1.0 / (4 * math.pi ** 2),
            "relative_error": float(abs(slope * 4 * math.pi ** 2 + 1.0)),
            "rms_residual": float(np.sqrt(np.mean(resid ** 2))),
            "points": int(d.size), "shell": (lo, hi), "J": space.J}

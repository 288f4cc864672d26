"""The pseudo-Hermitian frame of the standard CR sphere and the constants it induces.

Frame (polynomial-closed, so every operator below stays exact)::

    Z1    = zb2 d/dz1 - zb1 d/dz2
    Z1bar = z2 d/dzb1 - z1 d/dzb2
    T     = i (z1 d/dz1 + z2 d/dz2 - zb1 d/dzb1 - zb2 d/dzb2)

Nothing downstream hardcodes the Levi form, the Webster curvature, the torsion
or the volume: they are derived here from the frame and the contact form
``theta = Im(zb . dz)`` and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np
import sympy

from .polynomial import CQ, I, HarmonicPolynomial

CONVENTION_TAG = "S3-frame:Z1=zb2*d1-zb1*d2;T=i(z.d-zb.db);theta=Im(zb.dz)"

FIELDS = ("Z1", "Z1bar", "T")


def apply_vector_field(p: HarmonicPolynomial, which: str) -> HarmonicPolynomial:
    """Exact derivative of ``p`` along one frame field."""
    if which == "Z1":
        return p.derivative(0) * HarmonicPolynomial.coordinate("zb2") \
            - p.derivative(1) * HarmonicPolynomial.coordinate("zb1")
    if which == "Z1bar":
        return p.derivative(2) * HarmonicPolynomial.coordinate("z2") \
            - p.derivative(3) * HarmonicPolynomial.coordinate("z1")
    if which == "T":
        out = HarmonicPolynomial()
        for var, name, sign in ((0, "z1", 1), (1, "z2", 1), (2, "zb1", -1), (3, "zb2", -1)):
            out = out + p.derivative(var) * HarmonicPolynomial.coordinate(name) * sign
        return out * I
    raise ValueError(f"unknown frame field {which!r}")


def _field_velocity(which: str, z1, z2):
    """Velocity in C^2 of the real vector field X with X + i Y = 2 * field (holomorphic part)."""
    if which == "Z1":
        return np.conj(z2), -np.conj(z1)
    if which == "T":
        return 1j * z1, 1j * z2
    raise ValueError(which)


def frame_curve(which: str, z1, z2, t):
    """Integral curve through (z1, z2) of the real part of a frame field.

    ``"Z1"`` follows Re-direction v(z) = (zb2, -zb1); ``"iZ1"`` the rotated
    direction i v(z); ``"T"`` the Reeb flow.  All are great circles on S^3.
    """
    if which == "T":
        ph = np.exp(1j * t)
        return z1 * ph, z2 * ph
    v1, v2 = np.conj(z2), -np.conj(z1)
    if which == "iZ1":
        v1, v2 = 1j * v1, 1j * v2
    elif which != "Z1":
        raise ValueError(which)
    c, s = np.cos(t), np.sin(t)
    return c * z1 + s * v1, c * z2 + s * v2


# ---------------------------------------------------------------------------
# Contact form and derived geometry


def contact_form(z1, z2, v1, v2):
    """theta = Im(zb . dz) evaluated on tangent vectors (v1, v2)."""
    return np.imag(np.conj(z1) * v1 + np.conj(z2) * v2)


def contact_dtheta(a1, a2, b1, b2):
    """d theta = 2 sum dx ^ dy, i.e. 2 Im(conj(a) . b)."""
    return 2.0 * np.imag(np.conj(a1) * b1 + np.conj(a2) * b2)


def volume_density(z1, z2) -> np.ndarray:
    """Density of theta ^ d theta w.r.t. the round Riemannian volume of S^3.

    Evaluated on the oriented orthonormal tangent frame (i z, v, i v),
    v = (zb2, -zb1).
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    t1, t2 = 1j * z1, 1j * z2
    v1, v2 = np.conj(z2), -np.conj(z1)
    w1, w2 = 1j * v1, 1j * v2
    # theta ^ d theta (e1, e2, e3) as a full antisymmetrisation
    vecs = [(t1, t2), (v1, v2), (w1, w2)]
    total = 0.0
    for (i, j, k), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1)):
        total = total + sign * contact_form(z1, z2, *vecs[i]) * contact_dtheta(*vecs[j], *vecs[k])
    return total


@dataclass(frozen=True)
class FrameConstants:
    """Constants of (S^3, theta) read off from the structure equations."""

    levi: Fraction            # h_{1 1bar}
    webster_curvature: Fraction
    torsion: CQ               # A_{11}
    connection_theta: CQ      # omega_1^1 = connection_theta * theta + ...
    connection_zbar: CQ       # omega_1^1(Z1bar)
    volume: float             # V = integral of theta ^ d theta
    theta_of_T: float

    @property
    def qprime(self) -> Fraction:
        """Q' = 2 Delta_b R - 4|A|^2 + R^2 for constant R."""
        return self.webster_curvature ** 2 - 4 * (self.torsion.re ** 2 + self.torsion.im ** 2)


def _commutator_on_coordinates(A: str, B: str):
    out = []
    for name in ("z1", "z2", "zb1", "zb2"):
        x = HarmonicPolynomial.coordinate(name)
        out.append(apply_vector_field(apply_vector_field(x, B), A)
                   - apply_vector_field(apply_vector_field(x, A), B))
    return out


def _decompose_in_frame(components):
    """Solve [A,B] = a Z1 + b Z1bar + c T exactly (constant coefficients)."""
    frame_parts = {w: [apply_vector_field(HarmonicPolynomial.coordinate(n), w)
                       for n in ("z1", "z2", "zb1", "zb2")] for w in FIELDS}
    rows, rhs = [], []
    for coord in range(4):
        mon = set(components[coord].terms)
        for w in FIELDS:
            mon |= set(frame_parts[w][coord].terms)
        for e in sorted(mon):
            row = []
            for w in FIELDS:
                c = frame_parts[w][coord].terms.get(e, CQ(0))
                row.append(sympy.Rational(c.re.numerator, c.re.denominator)
                           + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator))
            c = components[coord].terms.get(e, CQ(0))
            rows.append(row)
            rhs.append(sympy.Rational(c.re.numerator, c.re.denominator)
                       + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator))
    M = sympy.Matrix(rows)
    b = sympy.Matrix(rhs)
    sol, params = M.gauss_jordan_solve(b)
    if params.shape[0]:
        raise ArithmeticError("frame is degenerate")
    out = []
    for v in sol:
        v = sympy.nsimplify(sympy.expand(v))
        re, im = sympy.re(v), sympy.im(v)
        out.append(CQ(Fraction(int(sympy.fraction(re)[0]), int(sympy.fraction(re)[1])),
                      Fraction(int(sympy.fraction(im)[0]), int(sympy.fraction(im)[1]))))
    return dict(zip(FIELDS, out))


def structure_constants():
    """Exact brackets of the frame: {(A, B): {field: coefficient}}."""
    return {(A, B): _decompose_in_frame(_commutator_on_coordinates(A, B))
            for A, B in (("Z1", "Z1bar"), ("T", "Z1"), ("T", "Z1bar"))}


def verify_frame_axioms(samples: int = 64, seed: int = 0) -> dict:
    """Check the frame against its defining properties; returns the residuals.

    * Z1bar annihilates holomorphic polynomials,
    * theta(T) = 1 and theta vanishes on Re Z1, Im Z1,
    * the frame fields are tangent to S^3 (kill |z|^2).
    """
    r2 = HarmonicPolynomial({(1, 0, 1, 0): CQ(1), (0, 1, 0, 1): CQ(1)})
    holo = HarmonicPolynomial.monomial(2, 1) + HarmonicPolynomial.monomial(0, 3, coef=CQ(1, 2))
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(samples, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    z1, z2 = x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]
    t1, t2 = _field_velocity("T", z1, z2)
    v1, v2 = _field_velocity("Z1", z1, z2)
    return {
        "zbar_holomorphic": apply_vector_field(holo, "Z1bar").is_zero(),
        "tangent": all(apply_vector_field(r2, w).is_zero() for w in FIELDS),
        "theta_T_minus_1": float(np.max(np.abs(contact_form(z1, z2, t1, t2) - 1.0))),
        "theta_horizontal": float(max(np.max(np.abs(contact_form(z1, z2, v1, v2))),
                                      np.max(np.abs(contact_form(z1, z2, 1j * v1, 1j * v2))))),
    }


@lru_cache(maxsize=None)
def frame_constants() -> FrameConstants:
    """Derive Levi form, connection, torsion, Webster curvature and volume.

    With constant structure coefficients, d theta^k(e_i, e_j) = -theta^k([e_i, e_j]).
    Writing d theta^1 = p theta^theta^1 + q theta^theta^1bar + s theta^1^theta^1bar,
    the structure equations give omega_1^1 = -p theta - conj(s) theta^1 + s theta^1bar,
    A^1_1bar = q, and R = -i p h - 2|s|^2 / h.
    """
    sc = structure_constants()
    zz = sc[("Z1", "Z1bar")]
    # d theta(Z1, Z1bar) = -theta([Z1, Z1bar]) = i h
    levi_cq = (-zz["T"]) / I
    if levi_cq.im != 0 or levi_cq.re <= 0:
        raise ArithmeticError(f"Levi form not positive real: {levi_cq}")
    h = levi_cq.re
    p = -sc[("T", "Z1")]["Z1"]
    q = -sc[("T", "Z1bar")]["Z1"]
    s = -zz["Z1"]
    if p.re != 0:
        raise ArithmeticError("connection form cannot be made imaginary")
    conn_zbar = s  # omega_1^1(Z1bar)
    R = (-(I * p * h)).re - 2 * (s.re ** 2 + s.im ** 2) / h
    torsion = q * h
    rng = np.random.default_rng(1)
    x = rng.normal(size=(256, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    dens = volume_density(x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3])
    if np.ptp(dens) > 1e-12:
        raise ArithmeticError("theta ^ d theta is not a constant multiple of the round volume")
    round_volume = 2.0 * math.pi ** 2
    t = verify_frame_axioms()
    return FrameConstants(levi=h, webster_curvature=R, torsion=torsion,
                          connection_theta=-p, connection_zbar=conn_zbar,
                          volume=float(np.mean(dens)) * round_volume,
                          theta_of_T=1.0 + t["theta_T_minus_1"] if t["zbar_holomorphic"] else float("nan"))


def sublaplacian(p: HarmonicPolynomial) -> HarmonicPolynomial:
    """Delta_b = nabla^1 nabla_1 + nabla^1bar nabla_1bar on functions.

    nabla^1 nabla_1 u = h^{-1} (Z1bar Z1 u - omega_1^1(Z1bar) Z1 u), plus conjugate.
    """
    fc = frame_constants()
    hinv = CQ(1 / fc.levi)
    z = apply_vector_field(p, "Z1")
    zb = apply_vector_field(p, "Z1bar")
    first = apply_vector_field(z, "Z1bar") - z * fc.connection_zbar
    second = apply_vector_field(zb, "Z1") - zb * fc.connection_zbar.conjugate()
    return (first + second) * hinv


def pprime(p: HarmonicPolynomial) -> HarmonicPolynomial:
    """Paneitz-type operator P' on a pluriharmonic polynomial (pseudo-Einstein form).

    P' f = 4 Delta_b^2 f - 8 Im(nabla^1 (A_11 nabla^1 f)) - 4 Re(nabla^1 (R nabla_1 f)).
    The torsion term is evaluated with the derived A_11 (zero on the sphere);
    R is constant so it factors out of the divergence.
    """
    fc = frame_constants()
    hinv = CQ(1 / fc.levi)
    lap2 = sublaplacian(sublaplacian(p))
    z = apply_vector_field(p, "Z1")
    div_r = (apply_vector_field(z, "Z1bar") - z * fc.connection_zbar) * hinv * CQ(fc.webster_curvature)
    out = lap2 * CQ(4) - div_r.real_part() * CQ(4)
    if not fc.torsion.is_zero():
        raise NotImplementedError("torsion terms are only needed off the standard sphere")
    return out

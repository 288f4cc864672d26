"""Tensor quadrature on S^3 in Hopf coordinates, certified against exact monomial integrals.

Points are parametrised as ``z1 = sqrt(1 - s) e^{i xi1}``, ``z2 = sqrt(s) e^{i xi2}``
with ``s`` in [0, 1].  In these coordinates theta ^ d theta = ds dxi1 dxi2, so a
Gauss-Legendre rule in ``s`` times trapezoidal rules in both angles is a
product rule for the contact volume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
import math

import numpy as np

from .errors import CertificationError
from .frame import frame_constants


def exact_monomial_integral(a1, a2, b1, b2) -> float:
    """Integral of z^alpha zb^beta against theta ^ d theta."""
    if a1 != b1 or a2 != b2:
        return 0.0
    return frame_constants().volume * factorial(a1) * factorial(a2) / factorial(a1 + a2 + 1)


def grid_shape_for_degree(degree: int) -> tuple:
    """(n_s, n_xi) making the product rule exact for total degree <= ``degree``."""
    n_xi = degree + 1
    n_s = (degree // 2 + 2) // 2
    return max(n_s, 1), max(n_xi, 2)


@dataclass(frozen=True)
class QuadratureGrid:
    """Product grid with positive weights summing to the contact volume V."""

    degree: int
    s: np.ndarray          # Gauss nodes in (0, 1)
    ws: np.ndarray         # Gauss weights (sum 1)
    n_xi: int
    certified_degree: int = -1
    worst: tuple = field(default=(), compare=False)

    @property
    def shape(self):
        return (self.s.size, self.n_xi, self.n_xi)

    @property
    def size(self):
        return self.s.size * self.n_xi * self.n_xi

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_xi) / self.n_xi

    @property
    def angle_weight(self) -> float:
        return (2.0 * np.pi / self.n_xi) ** 2

    @property
    def weights(self) -> np.ndarray:
        w = self.ws[:, None, None] * self.angle_weight
        return np.broadcast_to(w, self.shape)

    @property
    def z1(self) -> np.ndarray:
        r = np.sqrt(1.0 - self.s)[:, None, None]
        return r * np.exp(1j * self.xi)[None, :, None] * np.ones(self.shape)

    @property
    def z2(self) -> np.ndarray:
        r = np.sqrt(self.s)[:, None, None]
        return r * np.exp(1j * self.xi)[None, None, :] * np.ones(self.shape)

    def points(self):
        """Nodes as a flat (n, 2) complex array."""
        return np.stack([self.z1.ravel(), self.z2.ravel()], axis=1)

    def integrate(self, values) -> float:
        """Quadrature sum; ``values`` has the grid shape (or flattened)."""
        v = np.asarray(values).reshape(self.shape)
        return float(np.sum(self.ws * np.sum(v, axis=(1, 2)).real) * self.angle_weight)

    def integrate_complex(self, values) -> complex:
        v = np.asarray(values).reshape(self.shape)
        return complex(np.sum(self.ws * np.sum(v, axis=(1, 2))) * self.angle_weight)

    def monomial_sum(self, a1, a2, b1, b2) -> complex:
        """Quadrature value of a monomial, using the product structure of the grid."""
        m1, m2 = a1 - b1, a2 - b2
        k = np.arange(self.n_xi)
        e1 = np.sum(np.exp(2j * np.pi * m1 * k / self.n_xi)) * (2 * np.pi / self.n_xi)
        e2 = np.sum(np.exp(2j * np.pi * m2 * k / self.n_xi)) * (2 * np.pi / self.n_xi)
        radial = np.sum(self.ws * (1.0 - self.s) ** ((a1 + b1) / 2) * self.s ** ((a2 + b2) / 2))
        return complex(radial * e1 * e2)


def _monomial_exponents(degree):
    """All (a1, a2, b1, b2) with total degree <= ``degree`` as an int array."""
    r = np.arange(degree + 1)
    e = np.stack(np.meshgrid(r, r, r, r, indexing="ij"), axis=-1).reshape(-1, 4)
    return e[e.sum(axis=1) <= degree]


def _factor_tables(grid: QuadratureGrid, degree: int):
    m = np.arange(-degree, degree + 1)
    k = np.arange(grid.n_xi)
    tr = np.exp(2j * np.pi * np.outer(m, k) / grid.n_xi).sum(axis=1) * (2 * np.pi / grid.n_xi)
    p = np.arange(degree + 1)
    # radial[p, q] = sum_s ws (1 - s)^(p/2) s^(q/2)
    radial = np.einsum("s,sp,sq->pq", grid.ws,
                       (1.0 - grid.s)[:, None] ** (p[None, :] / 2),
                       grid.s[:, None] ** (p[None, :] / 2))
    return tr, radial


def certify(grid: QuadratureGrid, degree: int):
    """Worst error over all monomials of total degree <= ``degree``.

    The grid sum of a monomial factorises over the tensor grid, so every
    monomial is evaluated as (radial Gauss sum) x (two trapezoid sums).
    Error is relative to the exact value when nonzero and relative to V
    otherwise.  Returns (worst_error, worst_monomial).

    Up to degree 40 every monomial is enumerated.  Beyond that the same
    maximum is taken factor by factor: the diagonal monomials z^a zb^a are
    indexed by (a1, a2) alone, and an off-diagonal monomial's sum is the
    product of its factors, so its worst case is bounded by the largest
    trapezoid sum over nonzero frequencies times the largest radial sum.
    """
    V = frame_constants().volume
    tr, radial = _factor_tables(grid, degree)
    lf = np.array([math.lgamma(i + 1) for i in range(degree + 2)])
    if degree <= 40:
        e = _monomial_exponents(degree)
        got = (radial[e[:, 0] + e[:, 2], e[:, 1] + e[:, 3]]
               * tr[e[:, 0] - e[:, 2] + degree] * tr[e[:, 1] - e[:, 3] + degree])
        diag = (e[:, 0] == e[:, 2]) & (e[:, 1] == e[:, 3])
        lexact = lf[e[:, 0]] + lf[e[:, 1]] - lf[np.minimum(e[:, 0] + e[:, 1] + 1, degree + 1)]
        exact = np.where(diag, V * np.exp(lexact), 0.0)
        scale = np.where(diag, np.abs(exact), V)
        err = np.abs(got - exact) / scale
        i = int(np.argmax(err))
        return float(err[i]), tuple(int(x) for x in e[i])
    worst, mono = 0.0, None
    for a1 in range(degree // 2 + 1):
        a2 = np.arange(degree // 2 - a1 + 1)
        got = radial[2 * a1, 2 * a2] * tr[degree] ** 2
        exact = V * np.exp(lf[a1] + lf[a2] - lf[a1 + a2 + 1])
        err = np.abs(got - exact) / exact
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, mono = float(err[i]), (a1, int(a2[i]), a1, int(a2[i]))
    off = np.abs(tr.copy())
    off[degree] = 0.0
    m_worst = int(np.argmax(off))
    bound = float(off[m_worst] * np.abs(tr).max() * np.abs(radial).max() / V)
    if bound > worst:
        m = m_worst - degree
        worst, mono = bound, (max(m, 0), 0, max(-m, 0), 0)
    return worst, mono


def build_quadrature(degree: int, n_xi: int | None = None, n_s: int | None = None,
                     rtol: float = 1e-12) -> QuadratureGrid:
    """Product grid exact for all monomials of total degree <= ``degree``.

    ``n_xi``/``n_s`` may enlarge the default resolution.  Exactness is
    certified a posteriori; a failure raises :class:`CertificationError`
    naming the worst monomial.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    ns0, nx0 = grid_shape_for_degree(degree)
    n_s = max(ns0, n_s or 0)
    n_xi = max(nx0, n_xi or 0)
    x, w = np.polynomial.legendre.leggauss(n_s)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    grid = QuadratureGrid(degree=degree, s=s, ws=ws, n_xi=n_xi)
    err, mono = certify(grid, degree)
    if err > rtol:
        raise CertificationError(
            f"quadrature of degree {degree} fails certification: worst monomial "
            f"{mono} with relative error {err:.3e}")
    return QuadratureGrid(degree=degree, s=s, ws=ws, n_xi=n_xi,
                          certified_degree=degree, worst=(mono, err))


def grid_for_band(J: int, oversample: float = 2.0, extra: int = 8) -> QuadratureGrid:
    """Grid for fields of degree <= J that also carries nonlinear products.

    Exactness degree ``oversample * 2J + extra``: products of two band-limited
    fields are integrated exactly, exponentials to spectral accuracy.
    """
    degree = int(math.ceil(oversample * 2 * J)) + extra
    ns, nx = grid_shape_for_degree(degree)
    x, w = np.polynomial.legendre.leggauss(ns)
    grid = QuadratureGrid(degree=degree, s=0.5 * (x + 1.0), ws=0.5 * w, n_xi=_fft_size(nx))
    cdeg = degree
    err, mono = certify(grid, cdeg)
    if err > 1e-12:
        raise CertificationError(f"grid fails certification at {mono}: {err:.3e}")
    return QuadratureGrid(degree=degree, s=grid.s, ws=grid.ws, n_xi=grid.n_xi,
                          certified_degree=cdeg, worst=(mono, err))


def _fft_size(n: int) -> int:
    """Smallest 2^a 3^b 5^c >= n."""
    best = None
    for a in range(0, 16):
        for b in range(0, 10):
            for c in range(0, 7):
                v = 2 ** a * 3 ** b * 5 ** c
                if v >= n and (best is None or v < best):
                    best = v
    return best

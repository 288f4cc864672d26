"""Bigraded spherical harmonics on S^3.

Two realisations of the same orthonormal system live here:

* :class:`BasisTable` -- every bidegree (j, k) with j + k <= J_max, built by
  exact Gram-Schmidt.  Each H_{j,k} splits into one-dimensional Fourier modes
  e^{i(m1 xi1 + m2 xi2)} with m1 + m2 = j - k, so Gram-Schmidt only runs
  inside a mode, against the lower bidegrees (j - i, k - i).  Polynomial
  identities (eigenfunctions of Delta_b, harmonicity) are then checked
  exactly.  Practical up to J_max ~ 12.
* :class:`PluriSpace` -- only the pluriharmonic part, i.e. bidegrees (j, 0)
  and (0, j).  Its orthonormal basis is the normalised real and imaginary
  parts of holomorphic monomials, so transforms reduce to 2-D FFTs on the
  Hopf grid and scale to J ~ 100.

Both use the same real basis functions and the same ordering on the
pluriharmonic part: degree j ascending, then z1^a z2^(j-a) for a = j..0,
then the real part before the imaginary part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import math

import numpy as np

from .errors import CertificationError, ValidationError
from .frame import apply_vector_field, frame_constants, sublaplacian
from .polynomial import CQ, HarmonicPolynomial, inner_mean
from .quadrature import QuadratureGrid, build_quadrature, grid_for_band


@dataclass(frozen=True, order=True)
class BiDegree:
    j: int
    k: int

    def __post_init__(self):
        if self.j < 0 or self.k < 0:
            raise ValidationError("bidegree entries must be nonnegative")

    @property
    def complex_dimension(self) -> int:
        """dim H_{j,k} on S^3."""
        return self.j + self.k + 1

    @property
    def pluriharmonic(self) -> bool:
        return self.j == 0 or self.k == 0


@dataclass(frozen=True)
class BasisElement:
    """One real orthonormal basis function ``scale * poly``.

    ``bidegree`` is the representative with j >= k; the element lies in
    H_{j,k} + H_{k,j}.  ``source`` is the complex orthogonal polynomial it was
    taken from (unnormalised, exact).
    """

    bidegree: BiDegree
    mode: int            # m1 of the Fourier mode of ``source``
    part: str            # "re", "im" or "real"
    poly: HarmonicPolynomial
    source: HarmonicPolynomial
    scale: float
    eigenvalue: Fraction  # of Delta_b

    @property
    def pluriharmonic(self) -> bool:
        return self.bidegree.pluriharmonic


def _mode_monomial(j, k, m1):
    m2 = (j - k) - m1
    c = max(0, -m1)
    a = m1 + c
    b, d = j - a, k - c
    if min(a, b, c, d) < 0 or b - d != m2:
        raise ValueError("no monomial for this mode")
    return (a, b, c, d)


def _complex_orthogonal_system(J_max):
    """Exact orthogonal polynomials phi[(j, k, m1)] for j >= k, j + k <= J_max.

    Returns (polys, norms) with norms the exact normalised mean of |phi|^2.
    """
    polys, norms = {}, {}
    for total in range(J_max + 1):
        for j in range(total, (total - 1) // 2, -1):
            k = total - j
            if k > j:
                continue
            for m1 in range(j, -k - 1, -1):
                a, b, c, d = _mode_monomial(j, k, m1)
                p = HarmonicPolynomial.monomial(a, b, c, d)
                for i in range(1, k + 1):
                    key = (j - i, k - i, m1)
                    if key not in polys:      # mode absent from the lower bidegree
                        continue
                    q = polys[key]
                    coef = inner_mean(p, q) / CQ(norms[key])
                    p = p - q * coef
                nrm = inner_mean(p, p)
                if nrm.im != 0 or nrm.re <= 0:
                    raise CertificationError(
                        f"rank deficiency in Gram-Schmidt at bidegree {(j, k)}, mode {m1}")
                polys[(j, k, m1)] = p.sphere_normal_form()
                norms[(j, k, m1)] = nrm.re
    return polys, norms


def _exact_eigenvalue(p: HarmonicPolynomial, j, k) -> Fraction:
    """Read off lambda with Delta_b p = lambda p, exactly, on the homogeneous lift."""
    h = p.homogenize(j, k) if j + k else p
    lap = sublaplacian(h)
    e, c = next(iter(h.terms.items()))
    lam = lap.terms.get(e, CQ(0)) / c
    if lam.im != 0 or not (lap - h * lam).is_zero():
        raise CertificationError(f"element of bidegree {(j, k)} is not a Delta_b eigenfunction")
    return lam.re


class BasisTable:
    """Real orthonormal basis of the bigraded harmonics with j + k <= J_max."""

    def __init__(self, J_max: int, elements: list):
        self.J_max = J_max
        self.elements = elements

    def __len__(self):
        return len(self.elements)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.array([float(e.eigenvalue) for e in self.elements])

    @cached_property
    def pluri_mask(self) -> np.ndarray:
        return np.array([e.pluriharmonic for e in self.elements])

    @cached_property
    def bidegrees(self) -> list:
        return [e.bidegree for e in self.elements]

    def pluri_indices(self) -> np.ndarray:
        """Positions of the pluriharmonic elements, in :class:`PluriSpace` order."""
        return np.flatnonzero(self.pluri_mask)

    def dimension_counts(self) -> dict:
        """Real dimension of H_{j,k} + H_{k,j} per representative bidegree."""
        out = {}
        for e in self.elements:
            out[e.bidegree] = out.get(e.bidegree, 0) + 1
        return out

    # -- grid transforms ---------------------------------------------------
    def default_grid(self) -> QuadratureGrid:
        return build_quadrature(2 * self.J_max + 2)

    def _check_grid(self, grid):
        if grid.certified_degree < 2 * self.J_max:
            raise ValidationError(
                f"grid certified to degree {grid.certified_degree} < 2 J_max = {2 * self.J_max}")

    def evaluate(self, z1, z2) -> np.ndarray:
        """Matrix of basis values, shape (len(basis), *z1.shape)."""
        z1 = np.asarray(z1)
        out = np.empty((len(self),) + z1.shape)
        for i, e in enumerate(self.elements):
            out[i] = e.scale * e.poly.evaluate(z1, z2).real
        return out

    def _grid_matrix(self, grid):
        key = (grid.s.tobytes(), grid.n_xi)
        cache = self.__dict__.setdefault("_gm", {})
        if key not in cache:
            self._check_grid(grid)
            cache[key] = self.evaluate(grid.z1, grid.z2).reshape(len(self), -1)
        return cache[key]

    def synthesize(self, c, grid: QuadratureGrid) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape[-1] != len(self):
            raise ValidationError(f"coefficient length {c.shape[-1]} != basis size {len(self)}")
        return (c @ self._grid_matrix(grid)).reshape(c.shape[:-1] + grid.shape)

    def analyze(self, g, grid: QuadratureGrid) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-3:] != grid.shape:
            raise ValidationError(f"grid field of shape {g.shape} does not match grid {grid.shape}")
        w = grid.weights.reshape(-1)
        return (g.reshape(g.shape[:-3] + (-1,)) * w) @ self._grid_matrix(grid).T

    def gram(self, grid: QuadratureGrid) -> np.ndarray:
        B = self._grid_matrix(grid)
        return (B * grid.weights.reshape(-1)) @ B.T

    @staticmethod
    def inner_product(u, v) -> float:
        """L^2(theta ^ d theta) product of two coefficient vectors (orthonormal basis)."""
        return float(np.dot(u, v))

    def expand_polynomial(self, p: HarmonicPolynomial) -> np.ndarray:
        """Exact expansion coefficients of a real polynomial of degree <= J_max."""
        V = frame_constants().volume
        out = np.empty(len(self))
        for i, e in enumerate(self.elements):
            out[i] = float(inner_mean(p, e.poly).re) * V * e.scale
        return out

    # -- exact operators ---------------------------------------------------
    def reeb_matrix(self) -> np.ndarray:
        """Matrix of T on coefficients (skew-symmetric); derived from exact T phi = i w phi."""
        n = len(self)
        M = np.zeros((n, n))
        index = {(e.bidegree, e.mode, e.part): i for i, e in enumerate(self.elements)}
        for i, e in enumerate(self.elements):
            if e.part == "im":
                continue
            tphi = apply_vector_field(e.source, "T")
            t, c = next(iter(e.source.terms.items()))
            w = tphi.terms.get(t, CQ(0)) / c
            if w.re != 0 or not (tphi - e.source * w).is_zero():
                raise CertificationError("T does not act diagonally on a Fourier mode")
            omega = float(w.im)
            if e.part == "real":
                continue   # omega = 0 for real elements
            i_im = index[(e.bidegree, e.mode, "im")]
            # T Re(phi) = -omega Im(phi), T Im(phi) = omega Re(phi)
            M[i_im, i] = -omega
            M[i, i_im] = omega
        return M


def build_basis(J_max: int) -> BasisTable:
    """Exact real orthonormal basis of the bigraded harmonics with j + k <= J_max."""
    if J_max < 1:
        raise ValidationError("J_max must be at least 1")
    V = frame_constants().volume
    polys, norms = _complex_orthogonal_system(J_max)
    elements = []
    for (j, k, m1), phi in polys.items():
        bd = BiDegree(j, k)
        lam = _exact_eigenvalue(phi, j, k)
        nrm = math.sqrt(float(norms[(j, k, m1)]) * V)
        if j == k and m1 < 0:
            continue
        if j == k and m1 == 0:
            if not phi.imag_part().is_zero():
                raise CertificationError("self-conjugate mode is not real")
            elements.append(BasisElement(bd, m1, "real", phi, phi, 1.0 / nrm, lam))
            continue
        scale = math.sqrt(2.0) / nrm
        elements.append(BasisElement(bd, m1, "re", phi.real_part(), phi, scale, lam))
        elements.append(BasisElement(bd, m1, "im", phi.imag_part(), phi, scale, lam))
    elements.sort(key=lambda e: (e.bidegree.j + e.bidegree.k, e.bidegree.j, -e.mode,
                                 {"real": 0, "re": 0, "im": 1}[e.part]))
    return BasisTable(J_max, elements)


# ---------------------------------------------------------------------------
# pluriharmonic space on the FFT grid
# ---------------------------------------------------------------------------

def monomial_norm(a: int, b: int) -> float:
    """L^2(theta ^ d theta) norm of z1^a z2^b."""
    V = frame_constants().volume
    return math.sqrt(V * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 1))


class PluriSpace:
    """Real pluriharmonic fields of degree <= J on a Hopf grid.

    A field is a real coefficient vector ``c`` of length ``dim``: ``c[0]``
    multiplies 1/sqrt(V); then for each degree j and a = j..0 the pair
    (sqrt 2 Re, sqrt 2 Im) of z1^a z2^(j-a) / ||z1^a z2^(j-a)||.
    """

    def __init__(self, J: int, grid: QuadratureGrid | None = None):
        if J < 1:
            raise ValidationError("J must be at least 1")
        self.J = J
        self.grid = grid if grid is not None else grid_for_band(J)
        if self.grid.n_xi <= 2 * J or self.grid.certified_degree < 2 * J:
            raise ValidationError("grid too coarse for exact analysis of degree-J fields")
        self.V = frame_constants().volume
        a, b = [], []
        for j in range(1, J + 1):
            for aa in range(j, -1, -1):
                a.append(aa)
                b.append(j - aa)
        self.mono_a = np.array(a, dtype=int)
        self.mono_b = np.array(b, dtype=int)
        self.mono_degree = self.mono_a + self.mono_b
        self.mono_norm = np.array([monomial_norm(x, y) for x, y in zip(a, b)])
        self.dim = 1 + 2 * len(a)
        deg = np.zeros(self.dim, dtype=int)
        deg[1::2] = self.mono_degree
        deg[2::2] = self.mono_degree
        self.degree = deg
        s = self.grid.s
        self._radial = ((1.0 - s)[:, None] ** (self.mono_a / 2.0)
                        * s[:, None] ** (self.mono_b / 2.0))      # (Ns, nmono)

    def __repr__(self):
        return f"PluriSpace(J={self.J}, dim={self.dim}, grid={self.grid.shape})"

    # -- coefficient bookkeeping ------------------------------------------
    def labels(self) -> list:
        """(j, a, part) per coefficient, in storage order."""
        out = [(0, 0, "const")]
        for a, b in zip(self.mono_a, self.mono_b):
            out.append((int(a + b), int(a), "re"))
            out.append((int(a + b), int(a), "im"))
        return out

    def index_of(self, a: int, b: int, part: str = "re") -> int:
        if a == 0 and b == 0:
            return 0
        j = a + b
        pos = j * (j + 1) - 2 + 2 * (j - a)    # 2 * sum_{i<j}(i+1) = j(j+1) - 2
        return 1 + pos + (part == "im")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    def constant(self, value: float) -> np.ndarray:
        c = self.zeros()
        c[0] = value * math.sqrt(self.V)
        return c

    def mean(self, c) -> float:
        return float(np.asarray(c)[..., 0] / math.sqrt(self.V))

    def holomorphic_coefficients(self, c) -> np.ndarray:
        """beta with u = c0/sqrt(V) + Re sum beta_ab z1^a z2^b."""
        c = np.asarray(c, dtype=float)
        return math.sqrt(2.0) / self.mono_norm * (c[..., 1::2] - 1j * c[..., 2::2])

    def from_holomorphic(self, const: float, beta) -> np.ndarray:
        """Inverse of :meth:`holomorphic_coefficients` (``const`` is the value of the mean)."""
        beta = np.asarray(beta) * self.mono_norm / math.sqrt(2.0)
        c = self.zeros()
        c[0] = const * math.sqrt(self.V)
        c[1::2] = beta.real
        c[2::2] = -beta.imag
        return c

    def truncate(self, c, J: int) -> np.ndarray:
        out = np.array(c, dtype=float)
        out[self.degree > J] = 0.0
        return out

    def embed(self, c, other: "PluriSpace") -> np.ndarray:
        """Coefficients of ``c`` (from ``other``) in this space, truncating if needed."""
        out = self.zeros()
        n = min(self.dim, other.dim)
        out[:n] = np.asarray(c)[:n]
        return out

    # -- transforms --------------------------------------------------------
    def synthesize(self, c) -> np.ndarray:
        """Grid values of the field with coefficients ``c``."""
        c = np.asarray(c, dtype=float)
        if c.shape[-1] != self.dim:
            raise ValidationError(f"coefficient length {c.shape[-1]} != space dimension {self.dim}")
        n = self.grid.n_xi
        beta = self.holomorphic_coefficients(c)
        B = np.zeros((self.grid.s.size, n, n), dtype=complex)
        B[:, self.mono_a, self.mono_b] = self._radial * beta
        vals = np.fft.ifft2(B, axes=(1, 2)).real * (n * n)
        return vals + c[0] / math.sqrt(self.V)

    def analyze(self, g) -> np.ndarray:
        """L^2-orthogonal projection of a real grid field onto the space (this is Gamma)."""
        g = np.asarray(g, dtype=float)
        if g.shape != self.grid.shape:
            raise ValidationError(f"grid field of shape {g.shape} does not match {self.grid.shape}")
        n = self.grid.n_xi
        G = np.fft.fft2(g, axes=(1, 2))[:, self.mono_a, self.mono_b]
        I = self.grid.angle_weight * np.einsum("s,sm,sm->m", self.grid.ws, self._radial, G)
        out = self.zeros()
        out[0] = self.grid.integrate(g) / math.sqrt(self.V)
        f = math.sqrt(2.0) / self.mono_norm
        out[1::2] = f * I.real
        out[2::2] = -f * I.imag
        return out

    def evaluate(self, c, z1, z2) -> np.ndarray:
        """Point values at arbitrary (z1, z2) (not necessarily grid nodes)."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        shape = np.broadcast(z1, z2).shape
        z1 = np.broadcast_to(z1, shape).reshape(-1)
        z2 = np.broadcast_to(z2, shape).reshape(-1)
        beta = self.holomorphic_coefficients(c)
        Bm = np.zeros((self.J + 1, self.J + 1), dtype=complex)
        Bm[self.mono_a, self.mono_b] = beta
        p1 = z1[:, None] ** np.arange(self.J + 1)
        p2 = z2[:, None] ** np.arange(self.J + 1)
        vals = np.einsum("ma,ab,mb->m", p1, Bm, p2).real
        return (vals + np.asarray(c)[0] / math.sqrt(self.V)).reshape(shape)

    def integrate(self, g) -> float:
        return self.grid.integrate(g)

    def inner_product(self, u, v) -> float:
        return float(np.dot(u, v))

    def unitary_action(self, U) -> np.ndarray:
        """Matrix T with beta(u o U) = T beta(u) on holomorphic coefficients (exact)."""
        U = np.asarray(U, dtype=complex)
        key = U.tobytes()
        cache = self.__dict__.setdefault("_uact", {})
        if key in cache:
            return cache[key]
        n = self.mono_a.size
        T = np.zeros((n, n), dtype=complex)
        pos = lambda a, b: (a + b) * (a + b + 1) // 2 - 1 + b
        for col, (a, b) in enumerate(zip(self.mono_a, self.mono_b)):
            for k in range(a + 1):
                ck = math.comb(a, k) * U[0, 0] ** k * U[0, 1] ** (a - k)
                for l in range(b + 1):
                    cl = math.comb(b, l) * U[1, 0] ** l * U[1, 1] ** (b - l)
                    x = k + l
                    T[pos(x, a + b - x), col] += ck * cl
        cache[key] = T
        return T

    def compose_unitary(self, c, U) -> np.ndarray:
        """Coefficients of u o U for a unitary 2x2 matrix U (exact for band-limited u)."""
        c = np.asarray(c, dtype=float)
        beta = self.holomorphic_coefficients(c)
        return self.from_holomorphic(self.mean(c), self.unitary_action(U) @ beta)

    def random_field(self, rng, J: int | None = None, decay: float = 1.0, scale: float = 1.0):
        """Random coefficients with degree-j entries ~ N(0, 1) / (1 + j)^decay."""
        J = self.J if J is None else J
        c = rng.normal(size=self.dim) / (1.0 + self.degree) ** decay
        c[self.degree > J] = 0.0
        return scale * c

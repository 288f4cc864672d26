"""CR automorphisms of S^3 through the Cayley transform.

Heisenberg points are (z, t) with z complex and t real; with w = t + i|z|^2
the Cayley map is

    C(z, t) = (2z / (w + i), -i (w - i) / (w + i)),

which sends the origin to (0, i) and has its pole at (0, -i).  Both C and
the Heisenberg dilation delta_r(z, w) = (r z, r^2 w) are linear fractional,
so every automorphism is stored as a 3x3 complex matrix acting on
homogeneous coordinates [zeta1 : zeta2 : 1].  That keeps the pole out of
all evaluations.

    h_{p,r} = U_p C delta_r C^{-1} U_p^*,   U_p unitary with U_p (0, i) = p.

For r > 1 the map expands a neighbourhood of p, so J(h_{p,r}) concentrates
at p.  With a = h^{-1}(0) (a point of the open ball)

    J(h)(zeta) = ((1 - |a|^2) / |1 - <zeta, a>|^2)^2,

and for h_{p,r} one has a = tanh(ln r) p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import PluriSpace
from .errors import NonConvergence, ValidationError
from .gauge import hermitian

_C = np.array([[2.0, 0, 0], [0, -1j, -1.0], [0, 1.0, 1j]], dtype=complex)
_C_INV = np.linalg.inv(_C)
CAYLEY_ORIGIN = np.array([0.0, 1j])
CAYLEY_POLE = np.array([0.0, -1j])
R_MAX = 1e4


def cayley(z, t) -> np.ndarray:
    """Heisenberg (z, t) -> S^3 as an (..., 2) complex array."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(t, dtype=float) + 1j * np.abs(z) ** 2
    return np.stack([2 * z / (w + 1j), -1j * (w - 1j) / (w + 1j)], axis=-1)


def cayley_inv(zeta, tol: float = 1e-14):
    """S^3 \\ {pole} -> Heisenberg; returns (z, t)."""
    zeta = np.asarray(zeta, dtype=complex)
    d = zeta[..., 1] + 1j
    if np.any(np.abs(d) <= tol):
        raise ValidationError("cayley_inv: input contains the pole (0, -i)")
    z = -zeta[..., 0] / d
    w = -1j * (zeta[..., 1] - 1j) / d
    return z, w.real


def unitary_to(p) -> np.ndarray:
    """A unitary U with U (0, i) = p."""
    p = np.asarray(p, dtype=complex)
    p = p / np.linalg.norm(p)
    c1 = -1j * p
    c0 = np.array([-np.conj(c1[1]), np.conj(c1[0])])
    return np.stack([c0, c1], axis=1)


def _lift(U) -> np.ndarray:
    M = np.eye(3, dtype=complex)
    M[:2, :2] = U
    return M


def _act(M, zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=complex)
    h = M[:, 0, None] * zeta[..., 0].reshape(-1) + M[:, 1, None] * zeta[..., 1].reshape(-1) + M[:, 2, None]
    out = (h[:2] / h[2]).T
    return out.reshape(zeta.shape)


@dataclass
class SphereAutomorphism:
    """h = rotation o h_{p,r}; the identity is p arbitrary, r = 1, no rotation."""

    p: np.ndarray = field(default_factory=lambda: np.array([1.0 + 0j, 0.0]))
    r: float = 1.0
    rotation: np.ndarray | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=complex)
        n = np.linalg.norm(self.p)
        if not np.isfinite(n) or n == 0:
            raise ValidationError("centre p must be a nonzero vector of C^2")
        self.p = self.p / n
        if not self.r > 0:
            raise ValidationError("dilation r must be positive")
        if self.rotation is not None:
            U = np.asarray(self.rotation, dtype=complex)
            if U.shape != (2, 2) or np.abs(U.conj().T @ U - np.eye(2)).max() > 1e-12:
                raise ValidationError("rotation must be a 2x2 unitary matrix")
            self.rotation = U

    @property
    def matrix(self) -> np.ndarray:
        Up = _lift(unitary_to(self.p))
        D = np.diag([self.r, self.r ** 2, 1.0]).astype(complex)
        M = Up @ _C @ D @ _C_INV @ Up.conj().T
        if self.rotation is not None:
            M = _lift(self.rotation) @ M
        return M / np.linalg.norm(M)

    def __call__(self, zeta) -> np.ndarray:
        return _act(self.matrix, zeta)

    def inverse_apply(self, zeta) -> np.ndarray:
        return _act(np.linalg.inv(self.matrix), zeta)

    @property
    def ball_point(self) -> np.ndarray:
        """a = h^{-1}(0), the interior point sent to the origin of the ball."""
        return self.inverse_apply(np.zeros(2, dtype=complex))

    def inverse(self) -> "SphereAutomorphism":
        """h_{p,r}^{-1} = h_{p,1/r} (then undo the rotation)."""
        inv = SphereAutomorphism(self.p, 1.0 / self.r)
        if self.rotation is None:
            return inv
        M = np.linalg.inv(self.matrix)
        return _MatrixAutomorphism(M, inv)

    def to_dict(self) -> dict:
        d = {"p": [self.p[0].real, self.p[0].imag, self.p[1].real, self.p[1].imag], "r": self.r}
        if self.rotation is not None:
            d["rotation"] = [[[x.real, x.imag] for x in row] for row in self.rotation]
        return d

    @classmethod
    def from_dict(cls, d) -> "SphereAutomorphism":
        p = np.array([d["p"][0] + 1j * d["p"][1], d["p"][2] + 1j * d["p"][3]])
        rot = d.get("rotation")
        if rot is not None:
            rot = np.array([[x[0] + 1j * x[1] for x in row] for row in rot])
        return cls(p, float(d["r"]), rot)


class _MatrixAutomorphism(SphereAutomorphism):
    def __init__(self, M, template):
        self._M = M / np.linalg.norm(M)
        self.p, self.r, self.rotation = template.p, template.r, None

    @property
    def matrix(self):
        return self._M


def compose(h2: SphereAutomorphism, h1: SphereAutomorphism) -> SphereAutomorphism:
    """h2 o h1."""
    return _MatrixAutomorphism(h2.matrix @ h1.matrix, h1)


def jacobian_from_ball_point(a, z1, z2) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    na = float(np.real(np.vdot(a, a)))
    den = np.abs(1.0 - hermitian(z1, z2, a[0], a[1])) ** 2
    return ((1.0 - na) / den) ** 2


def jacobian(h: SphereAutomorphism, z1, z2) -> np.ndarray:
    """J(h) at the given points (closed form through a = h^{-1}(0))."""
    return jacobian_from_ball_point(h.ball_point, z1, z2)


def half_log_jacobian(h: SphereAutomorphism, z1, z2) -> np.ndarray:
    a = h.ball_point
    na = float(np.real(np.vdot(a, a)))
    return math.log1p(-na) - 2.0 * np.log(np.abs(1.0 - hermitian(z1, z2, a[0], a[1])))


def bubble_coefficients(space: PluriSpace, p, r: float, mean_zero: bool = False) -> np.ndarray:
    """Exact expansion of 1/2 ln J(h_{p,r}), truncated at the space degree.

    With a = tanh(ln r) p,  1/2 ln J = ln(1 - |a|^2) + 2 Re sum_{j>=1} <zeta, a>^j / j.
    """
    p = np.asarray(p, dtype=complex)
    a = math.tanh(math.log(r)) * p / np.linalg.norm(p)
    na = float(np.real(np.vdot(a, a)))
    ca = np.conj(a)
    beta = np.array([2.0 / (x + y) * math.comb(x + y, x) * ca[0] ** x * ca[1] ** y
                     for x, y in zip(space.mono_a, space.mono_b)])
    return space.from_holomorphic(0.0 if mean_zero else math.log1p(-na), beta)


def bubble_tail(r: float, J: int) -> float:
    """sum_{j > J} |a|^{2j} / j: size of the truncated bubble tail (L^2-type weight)."""
    t = math.tanh(math.log(r)) ** 2
    return float(sum(t ** j / j for j in range(J + 1, J + 2000)))


@dataclass
class PulledBackField:
    """v = u o h + 1/2 ln J(h) on the grid, its expansion and the truncation error."""

    h: SphereAutomorphism
    values: np.ndarray
    coefficients: np.ndarray
    truncation_error: float


def pullback(u, h: SphereAutomorphism, space: PluriSpace, max_error: float | None = None,
             u_space: PluriSpace | None = None) -> PulledBackField:
    """Pull a pluriharmonic field back by h; ``truncation_error`` is relative in L^2."""
    u_space = space if u_space is None else u_space
    z1, z2 = space.grid.z1, space.grid.z2
    pts = np.stack([z1.reshape(-1), z2.reshape(-1)], axis=-1)
    hz = h(pts)
    v = (u_space.evaluate(u, hz[:, 0], hz[:, 1]).reshape(space.grid.shape)
         + half_log_jacobian(h, z1, z2))
    c = space.analyze(v)
    resid = v - space.synthesize(c)
    scale = math.sqrt(max(space.integrate(v * v), 1e-300))
    err = math.sqrt(space.integrate(resid * resid)) / scale
    if max_error is not None and err > max_error:
        J = space.J
        a2 = 1.0 - 1.0 / max(h.r, 1.0 / h.r) ** 2
        while J < 400 and math.sqrt(bubble_tail(max(h.r, 1.0 / h.r), J)) > max_error * 0.1:
            J += 4
        raise ValidationError(
            f"pullback truncation error {err:.2e} exceeds {max_error:.1e}; try J >= {J} "
            f"(|a|^2 = {a2:.3f})")
    return PulledBackField(h, v, c, err)


# ---------------------------------------------------------------------------
# centring
# ---------------------------------------------------------------------------

def _automorphism_from_y(y) -> SphereAutomorphism:
    y = np.asarray(y, dtype=float)
    n = float(np.linalg.norm(y))
    if n == 0.0:
        return SphereAutomorphism()
    r = min(math.exp(n), R_MAX)
    return SphereAutomorphism(np.array([y[0] + 1j * y[1], y[2] + 1j * y[3]]), r)


def centering_moments(weights, space: PluriSpace, h: SphereAutomorphism) -> np.ndarray:
    """(Re, Im) of int zeta_i e^{2v} for v = u o h + 1/2 ln J(h), normalised by int e^{2u}.

    By change of variables this is int h^{-1}(eta) e^{2u(eta)}, so only e^{2u}
    on the grid is needed.
    """
    pts = np.stack([space.grid.z1.reshape(-1), space.grid.z2.reshape(-1)], axis=-1)
    hp = h.inverse_apply(pts)
    w = weights.reshape(-1)
    W = space.grid.weights.reshape(-1) * w
    tot = W.sum()
    m = (W @ hp) / tot
    return np.array([m[0].real, m[0].imag, m[1].real, m[1].imag])


@dataclass
class CenteringResult:
    p: np.ndarray
    r: float
    h: SphereAutomorphism
    residual: float
    starts: int
    converged: bool


def center(u, space: PluriSpace, values=None, tol: float = 1e-8, max_iter: int = 60,
           fd_step: float = 1e-7) -> CenteringResult:
    """Find h = h_{p,r} with int zeta_i e^{2v} = 0 for v = u o h + 1/2 ln J(h).

    Damped Newton in y = ln(r) p in R^4 (so r = e^{|y|} >= 1), finite-difference
    Jacobian, deterministic starts at 0 and at the eight coordinate poles.
    ``values`` may supply u on the grid (otherwise synthesised from ``u``).
    Raises NonConvergence with the best residual if every start fails.
    """
    g = space.synthesize(u) if values is None else np.asarray(values, dtype=float)
    e2u = np.exp(2.0 * (g - g.max()))
    F = lambda y: centering_moments(e2u, space, _automorphism_from_y(y))
    starts = [np.zeros(4)]
    for i in range(4):
        for s in (1.0, -1.0):
            y = np.zeros(4)
            y[i] = s * math.log(2.0)
            starts.append(y)
    best = (np.inf, None)
    y_max = math.log(R_MAX)
    for k, y in enumerate(starts):
        f = F(y)
        nf = float(np.linalg.norm(f, np.inf))
        for _ in range(max_iter):
            if nf < tol:
                break
            Jm = np.empty((4, 4))
            for i in range(4):
                e = np.zeros(4)
                e[i] = fd_step
                Jm[:, i] = (F(y + e) - F(y - e)) / (2 * fd_step)
            try:
                dy = -np.linalg.solve(Jm, f)
            except np.linalg.LinAlgError:
                dy = -np.linalg.lstsq(Jm, f, rcond=None)[0]
            t = 1.0
            while t > 1e-6:
                yn = y + t * dy
                ny = np.linalg.norm(yn)
                if ny > y_max:
                    yn *= y_max / ny
                fn = F(yn)
                if np.linalg.norm(fn, np.inf) < nf:
                    break
                t *= 0.5
            else:
                break
            y, f, nf = yn, fn, float(np.linalg.norm(fn, np.inf))
        if nf < best[0]:
            best = (nf, y.copy())
        if nf < tol:
            h = _automorphism_from_y(y)
            return CenteringResult(h.p, h.r, h, nf, k + 1, True)
    raise NonConvergence(f"centring failed from all {len(starts)} starts; best residual {best[0]:.3e}")

"""Exact polynomial algebra on S^3 in the variables zeta_1, zeta_2 and their conjugates.

A polynomial is stored as a mapping from exponent tuples ``(a1, a2, b1, b2)``
(the monomial ``z1^a1 z2^a2 zb1^b1 zb2^b2``) to exact complex-rational
coefficients.  Everything here is exact; floating point only enters through
:meth:`HarmonicPolynomial.evaluate`.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, Tuple

import numpy as np

Exponent = Tuple[int, int, int, int]


class CQ:
    """Complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> "CQ":
        if isinstance(x, CQ):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact; pass CQ or Fraction")
        return cls(x, 0)

    def __add__(self, other):
        other = CQ.coerce(other)
        return CQ(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = CQ.coerce(other)
        return CQ(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return CQ.coerce(other) - self

    def __neg__(self):
        return CQ(-self.re, -self.im)

    def __mul__(self, other):
        other = CQ.coerce(other)
        return CQ(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = CQ.coerce(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * other.conjugate()
        return CQ(num.re / den, num.im / den)

    def conjugate(self) -> "CQ":
        return CQ(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __eq__(self, other):
        try:
            other = CQ.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


I = CQ(0, 1)


class HarmonicPolynomial:
    """Polynomial in z1, z2, conj(z1), conj(z2) with exact coefficients.

    Instances are treated as immutable; every operation returns a new object.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Exponent, CQ] | None = None):
        clean = {}
        for exps, c in (terms or {}).items():
            c = CQ.coerce(c)
            if not c.is_zero():
                clean[tuple(exps)] = c
        self.terms: Dict[Exponent, CQ] = clean

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "HarmonicPolynomial":
        return cls({(0, 0, 0, 0): CQ.coerce(c)})

    @classmethod
    def monomial(cls, a1=0, a2=0, b1=0, b2=0, coef=1) -> "HarmonicPolynomial":
        return cls({(a1, a2, b1, b2): CQ.coerce(coef)})

    @classmethod
    def coordinate(cls, name: str) -> "HarmonicPolynomial":
        idx = {"z1": 0, "z2": 1, "zb1": 2, "zb2": 3}[name]
        e = [0, 0, 0, 0]
        e[idx] = 1
        return cls({tuple(e): CQ(1)})

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            other = HarmonicPolynomial.constant(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return HarmonicPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return HarmonicPolynomial({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            other = HarmonicPolynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            c = CQ.coerce(other)
            return HarmonicPolynomial({e: v * c for e, v in self.terms.items()})
        out: Dict[Exponent, CQ] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                p = c1 * c2
                out[e] = out[e] + p if e in out else p
        return HarmonicPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = HarmonicPolynomial.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, HarmonicPolynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "HarmonicPolynomial(0)"
        parts = []
        for e, c in sorted(self.terms.items()):
            parts.append(f"{c}*z1^{e[0]} z2^{e[1]} zb1^{e[2]} zb2^{e[3]}")
        return "HarmonicPolynomial(" + " + ".join(parts) + ")"

    def is_zero(self) -> bool:
        return not self.terms

    # -- structure ---------------------------------------------------------
    def conjugate(self) -> "HarmonicPolynomial":
        return HarmonicPolynomial(
            {(e[2], e[3], e[0], e[1]): c.conjugate() for e, c in self.terms.items()})

    def real_part(self) -> "HarmonicPolynomial":
        return (self + self.conjugate()) * CQ(Fraction(1, 2))

    def imag_part(self) -> "HarmonicPolynomial":
        return (self - self.conjugate()) * CQ(0, Fraction(-1, 2))

    def bidegrees(self) -> set:
        return {(e[0] + e[1], e[2] + e[3]) for e in self.terms}

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def derivative(self, var: int) -> "HarmonicPolynomial":
        """Partial derivative in variable ``var`` (0: z1, 1: z2, 2: zb1, 3: zb2)."""
        out = {}
        for e, c in self.terms.items():
            if e[var] == 0:
                continue
            ne = list(e)
            ne[var] -= 1
            out[tuple(ne)] = c * e[var]
        return HarmonicPolynomial(out)

    # -- values ------------------------------------------------------------
    def evaluate(self, z1, z2) -> np.ndarray:
        """Evaluate at points with complex coordinates ``z1``, ``z2`` (broadcasting)."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        out = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
        if not self.terms:
            return out
        deg = max(max(e) for e in self.terms)
        zb1, zb2 = np.conj(z1), np.conj(z2)
        p1 = [np.ones_like(z1)]
        p2 = [np.ones_like(z2)]
        q1 = [np.ones_like(z1)]
        q2 = [np.ones_like(z2)]
        for _ in range(deg):
            p1.append(p1[-1] * z1)
            p2.append(p2[-1] * z2)
            q1.append(q1[-1] * zb1)
            q2.append(q2[-1] * zb2)
        for e, c in self.terms.items():
            out = out + complex(c) * p1[e[0]] * p2[e[1]] * q1[e[2]] * q2[e[3]]
        return out

    def sphere_normal_form(self) -> "HarmonicPolynomial":
        """Unique representative modulo |z1|^2 + |z2|^2 = 1.

        Every occurrence of z2*zb2 is replaced by 1 - z1*zb1; the result has
        ``min(a2, b2) == 0`` in every term.  Two polynomials agree on S^3 iff
        their normal forms are equal.
        """
        out: Dict[Exponent, CQ] = {}
        for e, c in self.terms.items():
            a1, a2, b1, b2 = e
            m = min(a2, b2)
            base = (a1, a2 - m, b1, b2 - m)
            # (1 - z1 zb1)^m expanded with binomial coefficients
            for i in range(m + 1):
                coef = c * (Fraction(factorial(m), factorial(i) * factorial(m - i)) * (-1) ** i)
                ne = (base[0] + i, base[1], base[2] + i, base[3])
                out[ne] = out[ne] + coef if ne in out else coef
        return HarmonicPolynomial(out)

    def equals_on_sphere(self, other: "HarmonicPolynomial") -> bool:
        return (self - other).sphere_normal_form().is_zero()

    def homogenize(self, j: int, k: int) -> "HarmonicPolynomial":
        """Homogeneous bidegree-(j, k) polynomial agreeing with ``self`` on S^3.

        Requires every term to have bidegree (j - i, k - i) for some i >= 0.
        """
        r2 = HarmonicPolynomial({(1, 0, 1, 0): CQ(1), (0, 1, 0, 1): CQ(1)})
        out = HarmonicPolynomial()
        for e, c in self.terms.items():
            p, q = e[0] + e[1], e[2] + e[3]
            i = j - p
            if i < 0 or k - q != i:
                raise ValueError(f"term of bidegree {(p, q)} cannot be lifted to {(j, k)}")
            out = out + HarmonicPolynomial({e: c}) * (r2 ** i)
        return out

    def euclidean_laplacian(self) -> "HarmonicPolynomial":
        """Sum_i d^2 / (dz_i dzb_i), proportional to the flat Laplacian of C^2."""
        return self.derivative(0).derivative(2) + self.derivative(1).derivative(3)

    # -- integration -------------------------------------------------------
    def mean_on_sphere(self) -> CQ:
        """Exact average over S^3 (the measure theta ^ d theta, normalised to 1)."""
        total = CQ(0)
        for e, c in self.terms.items():
            total = total + c * monomial_mean(e)
        return total


def monomial_mean(e: Exponent) -> Fraction:
    """Average of z^alpha zb^beta over S^3: delta_{alpha beta} alpha! / (|alpha| + 1)!."""
    a1, a2, b1, b2 = e
    if a1 != b1 or a2 != b2:
        return Fraction(0)
    return Fraction(factorial(a1) * factorial(a2), factorial(a1 + a2 + 1))


def inner_mean(p: HarmonicPolynomial, q: HarmonicPolynomial) -> CQ:
    """Exact normalised L^2 product  mean(p * conj(q))."""
    return (p * q.conjugate()).mean_on_sphere()


def linear_combination(items: Iterable[Tuple[object, HarmonicPolynomial]]) -> HarmonicPolynomial:
    out = HarmonicPolynomial()
    for c, p in items:
        out = out + p * c
    return out

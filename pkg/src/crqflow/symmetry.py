"""Finite unitary symmetry groups, invariant projections and fixed-point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import PluriSpace
from .errors import ValidationError


def _key(U, digits=9):
    return tuple(np.round(np.concatenate([U.real.ravel(), U.imag.ravel()]), digits) + 0.0)


class SymmetryGroup:
    """The group generated by unitary 2x2 matrices acting on (zeta1, zeta2)."""

    def __init__(self, generators, max_order: int = 512):
        gens = [np.asarray(g, dtype=complex) for g in generators]
        for g in gens:
            if g.shape != (2, 2) or np.abs(g.conj().T @ g - np.eye(2)).max() > 1e-10:
                raise ValidationError("group generators must be 2x2 unitary matrices")
        self.generators = gens
        elems = {_key(np.eye(2)): np.eye(2, dtype=complex)}
        frontier = [np.eye(2, dtype=complex)]
        while frontier:
            new = []
            for a in frontier:
                for g in gens:
                    b = g @ a
                    k = _key(b)
                    if k not in elems:
                        elems[k] = b
                        new.append(b)
                        if len(elems) > max_order:
                            raise ValidationError(f"group generated by the inputs has order > {max_order}")
            frontier = new
        self.elements = list(elems.values())
        self._check_closure()

    def _check_closure(self):
        keys = {_key(g) for g in self.elements}
        for a in self.elements:
            if _key(a.conj().T) not in keys:
                raise ValidationError("element set is not closed under inverses")
            for b in self.elements:
                if _key(a @ b) not in keys:
                    raise ValidationError("element set is not closed under products")

    @classmethod
    def trivial(cls):
        return cls([np.eye(2)])

    @classmethod
    def antipodal(cls):
        return cls([-np.eye(2)])

    @property
    def order(self) -> int:
        return len(self.elements)

    def symmetrize(self, c, space: PluriSpace) -> np.ndarray:
        """(1/|G|) sum_g u o g."""
        c = np.asarray(c, dtype=float)
        out = np.zeros_like(c)
        for g in self.elements:
            out += space.compose_unitary(c, g)
        return out / self.order

    def symmetrize_grid(self, func, z1, z2):
        """Group average of a function given as a callable f(z1, z2)."""
        acc = 0.0
        for g in self.elements:
            acc = acc + func(g[0, 0] * z1 + g[0, 1] * z2, g[1, 0] * z1 + g[1, 1] * z2)
        return acc / self.order

    def is_invariant(self, c, space: PluriSpace, tol: float = 1e-10) -> bool:
        return float(np.max(np.abs(self.symmetrize(c, space) - c))) <= tol * max(1.0, np.abs(c).max())

    def fixed_set(self, n_samples: int = 64) -> "FixedSet":
        return fixed_set(self, n_samples)


@dataclass
class FixedSet:
    """Sigma = {x in S^3 : g x = x for all g}; kind is 'empty', 'circle' or 'sphere'."""

    kind: str
    basis: np.ndarray           # orthonormal columns spanning the joint fixed subspace
    samples: np.ndarray         # (n, 2) points of Sigma

    @property
    def empty(self) -> bool:
        return self.kind == "empty"

    def describe(self) -> str:
        if self.kind == "empty":
            return "empty"
        if self.kind == "sphere":
            return "all of S^3"
        v = self.basis[:, 0]
        return f"circle {{e^(it) ({v[0]:.6g}, {v[1]:.6g})}}"


def fixed_set(G: SymmetryGroup, n_samples: int = 64) -> FixedSet:
    """Joint unit-eigenvalue eigenspace of the generators intersected with S^3."""
    A = np.concatenate([g - np.eye(2) for g in G.generators], axis=0)
    _, s, vh = np.linalg.svd(A)
    tol = 1e-10
    null = vh[np.sum(s > tol):].conj().T
    dim = null.shape[1]
    if dim == 0:
        return FixedSet("empty", null, np.zeros((0, 2), dtype=complex))
    t = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    if dim == 1:
        pts = np.exp(1j * t)[:, None] * null[:, 0][None, :]
        return FixedSet("circle", null, pts)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(n_samples, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return FixedSet("sphere", np.eye(2, dtype=complex), x[:, 0::2] + 1j * x[:, 1::2])


def invariance_drift(states, G: SymmetryGroup, space: PluriSpace, weights=None) -> np.ndarray:
    """||u - symmetrize(u)||_H for each state (H weights mu + 1 if given, else L^2)."""
    w = np.ones(space.dim) if weights is None else np.asarray(weights)
    out = []
    for u in states:
        d = np.asarray(u) - G.symmetrize(u, space)
        out.append(float(np.sqrt(np.dot(w * d, d))))
    return np.array(out)

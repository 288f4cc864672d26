"""Gauge distance on S^3 compatible with the Cayley/Heisenberg picture."""

from __future__ import annotations

import numpy as np

GAUGE_TAG = "d(z, w) = |1 - <z, w>|^(1/2)"


def hermitian(z1, z2, w1, w2):
    """<z, w> = z1 conj(w1) + z2 conj(w2)."""
    return z1 * np.conj(w1) + z2 * np.conj(w2)


def gauge_distance(z1, z2, w1, w2) -> np.ndarray:
    """d(z, w) = |1 - <z, w>|^(1/2); ranges over [0, sqrt 2] on S^3."""
    return np.sqrt(np.abs(1.0 - hermitian(z1, z2, w1, w2)))


def geodesic_distance(z1, z2, w1, w2) -> np.ndarray:
    """Round great-circle distance on the unit sphere of C^2 = R^4."""
    c = np.clip(hermitian(z1, z2, w1, w2).real, -1.0, 1.0)
    return np.arccos(c)


class GaugeDistance:
    """Callable wrapper so reports can carry the gauge definition with them."""

    tag = GAUGE_TAG

    def __call__(self, z, w):
        z = np.asarray(z)
        w = np.asarray(w)
        return gauge_distance(z[..., 0], z[..., 1], w[..., 0], w[..., 1])

    def comparability(self, n: int = 2000, seed: int = 0, max_geo: float = 0.5) -> dict:
        """Empirical constants in c1 d_geo <= d <= c2 sqrt(d_geo) on random nearby pairs."""
        rng = np.random.default_rng(seed)
        z = random_sphere_points(rng, n)
        step = rng.normal(size=(n, 4))
        step -= np.sum(step * _as_real(z), axis=1, keepdims=True) * _as_real(z)
        step /= np.linalg.norm(step, axis=1, keepdims=True)
        t = rng.uniform(1e-4, max_geo, size=(n, 1))
        w_real = np.cos(t) * _as_real(z) + np.sin(t) * step
        w = w_real[:, 0::2] + 1j * w_real[:, 1::2]
        d = self(z, w)
        g = geodesic_distance(z[:, 0], z[:, 1], w[:, 0], w[:, 1])
        return {"c1": float(np.min(d / g)), "c2": float(np.max(d / np.sqrt(g))),
                "pairs": n, "max_geodesic": max_geo}


def _as_real(z):
    return np.stack([z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag], axis=1)


def random_sphere_points(rng, n: int) -> np.ndarray:
    """n uniform points on S^3 as an (n, 2) complex array."""
    x = rng.normal(size=(n, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return np.stack([x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3]], axis=1)

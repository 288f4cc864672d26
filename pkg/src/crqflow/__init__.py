"""Spectral laboratory for a prescribed-curvature gradient flow on the CR 3-sphere."""

__version__ = "0.1.0"

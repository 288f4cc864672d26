"""On-disk cache for the spectral tables (multipliers, quadrature, basis eigenvalues).

Layout: ``<stem>.npz`` with the arrays and ``<stem>.json`` with a header
{J_max, degree, convention, sha256, version}.  A header mismatch or a bad
checksum triggers a rebuild.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .frame import CONVENTION_TAG
from .operators import _cached_mu
from .quadrature import grid_for_band


def cache_dir() -> Path:
    """$CRQFLOW_CACHE, else ~/.cache/crqflow."""
    return Path(os.environ.get("CRQFLOW_CACHE", Path.home() / ".cache" / "crqflow"))


def _digest(arrays: dict) -> str:
    h = hashlib.sha256()
    for k in sorted(arrays):
        a = np.ascontiguousarray(arrays[k])
        h.update(k.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def build_tables(J: int) -> dict:
    grid = grid_for_band(J)
    return {"mu": np.array(_cached_mu(J)), "s": grid.s, "ws": grid.ws,
            "grid_meta": np.array([grid.degree, grid.n_xi, grid.certified_degree], dtype=np.int64),
            "sublaplacian": -np.arange(J + 1, dtype=float)}


def save_tables(stem, J: int, tables: dict | None = None) -> dict:
    tables = build_tables(J) if tables is None else tables
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    np.savez(buf, **tables)
    stem.with_suffix(".npz").write_bytes(buf.getvalue())
    header = {"J_max": J, "degree": int(tables["grid_meta"][0]), "convention": CONVENTION_TAG,
              "sha256": _digest(tables), "version": __version__}
    stem.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return header


def load_tables(stem, J: int, rebuild: bool = False) -> tuple[dict, dict, bool]:
    """Return (tables, header, rebuilt)."""
    stem = Path(stem)
    npz, hdr = stem.with_suffix(".npz"), stem.with_suffix(".json")
    if not rebuild and npz.exists() and hdr.exists():
        header = json.loads(hdr.read_text())
        with np.load(npz) as z:
            tables = {k: z[k] for k in z.files}
        if (header.get("J_max") == J and header.get("convention") == CONVENTION_TAG
                and header.get("sha256") == _digest(tables)):
            return tables, header, False
    tables = build_tables(J)
    header = save_tables(stem, J, tables)
    return tables, header, True

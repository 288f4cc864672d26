"""Experiment configuration: flat INI files with one section per concern.

Example::

    [run]
    J = 12

    [curvature]
    kind = synthetic          ; or: standard
    regime = negative         ; optional; checked against the sign of int Q'bar
    qbar_constant = -1

    [f]
    constant = -1
    monomials = 1 0 re 0.5    ; value * Re(z1^1 z2^0); entries separated by ','

    [u0]
    modes = 1 0 0.1           ; (j, idx, coefficient) on the orthonormal basis

Functions (f, u0, qbar) accept ``constant`` (the mean value), ``modes``
(orthonormal-basis coefficients in storage order) and ``monomials``
(a b re|im value, meaning value * Re or Im of z1^a z2^b).
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import PluriSpace
from .errors import ValidationError
from .operators import CurvatureData, qprime_standard, synthetic_curvature, triples_to_coeffs

SCENARIOS = ("basis-check", "flow-run", "center", "ineq", "nm", "green")
REGIMES = ("negative", "zero", "positive", "critical")


@dataclass
class ExperimentConfig:
    scenario: str
    parser: configparser.ConfigParser
    text: str
    seed: int = 0
    threads: int = 1
    sha256: str = field(init=False)

    def __post_init__(self):
        self.sha256 = hashlib.sha256(self.text.encode()).hexdigest()

    # typed accessors -----------------------------------------------------
    def get(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def getint(self, section, key, default=None, minimum=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            v = int(raw)
        except ValueError:
            raise ValidationError(f"[{section}] {key}: expected an integer, got {raw!r}") from None
        if minimum is not None and v < minimum:
            raise ValidationError(f"[{section}] {key}: must be >= {minimum} (got {v})")
        return v

    def getfloat(self, section, key, default=None, positive=False):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            v = float(raw)
        except ValueError:
            raise ValidationError(f"[{section}] {key}: expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ValidationError(f"[{section}] {key}: must be finite")
        if positive and not v > 0:
            raise ValidationError(f"[{section}] {key}: must be positive (got {v})")
        return v

    def getfloats(self, section, key, default=None):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ValidationError(f"[{section}] {key}: expected numbers, got {raw!r}") from None

    @property
    def J(self) -> int:
        return self.getint("run", "J", 12, minimum=1)


def load_config(path, scenario: str, seed: int = 0, threads: int = 1) -> ExperimentConfig:
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, scenario, seed, threads)


def parse_config(text: str, scenario: str, seed: int = 0, threads: int = 1) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"config parse error: {exc}") from None
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    cfg = ExperimentConfig(scenario, parser, text, seed, threads)
    declared = cfg.get("run", "scenario")
    if declared is not None and declared != scenario:
        raise ValidationError(f"[run] scenario = {declared!r} does not match subcommand {scenario!r}")
    return cfg


# ---------------------------------------------------------------------------
# function specs
# ---------------------------------------------------------------------------

def parse_function(cfg: ExperimentConfig, section: str, space: PluriSpace, default_constant=0.0):
    """Coefficient vector for the function declared in ``section``."""
    const = cfg.getfloat(section, "constant", default_constant)
    triples = []
    raw = cfg.get(section, "modes")
    if raw:
        for item in raw.split(","):
            parts = item.split()
            if len(parts) != 3:
                raise ValidationError(f"[{section}] modes: entry {item.strip()!r} is not 'j idx coef'")
            try:
                triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ValidationError(f"[{section}] modes: bad entry {item.strip()!r}") from None
    c = triples_to_coeffs(const, triples, space)
    raw = cfg.get(section, "monomials")
    if raw:
        for item in raw.split(","):
            parts = item.split()
            if len(parts) != 4 or parts[2] not in ("re", "im"):
                raise ValidationError(
                    f"[{section}] monomials: entry {item.strip()!r} is not 'a b re|im value'")
            try:
                a, b, v = int(parts[0]), int(parts[1]), float(parts[3])
            except ValueError:
                raise ValidationError(f"[{section}] monomials: bad entry {item.strip()!r}") from None
            if a < 0 or b < 0 or a + b == 0 or a + b > space.J:
                raise ValidationError(
                    f"[{section}] monomials: degree of z1^{a} z2^{b} must lie in 1..{space.J}")
            c += monomial_field(space, a, b, parts[2], v)
    return c


def monomial_field(space: PluriSpace, a: int, b: int, part: str, value: float) -> np.ndarray:
    """Coefficients of value * Re(z1^a z2^b) (or Im)."""
    c = space.zeros()
    i = space.index_of(a, b, "re")
    norm = space.mono_norm[(i - 1) // 2]
    if part == "re":
        c[i] = value * norm / math.sqrt(2.0)
    else:
        c[i + 1] = value * norm / math.sqrt(2.0)
    return c


def parse_curvature(cfg: ExperimentConfig, space: PluriSpace) -> CurvatureData:
    kind = cfg.get("curvature", "kind", "synthetic")
    f = parse_function(cfg, "f", space, default_constant=1.0) if cfg.parser.has_section("f") else None
    if kind == "standard":
        data = qprime_standard(space, f)
    elif kind == "synthetic":
        q = parse_function(cfg, "curvature", space,
                           default_constant=cfg.getfloat("curvature", "qbar_constant", 0.0))
        data = synthetic_curvature(space, q, f)
    else:
        raise ValidationError(f"[curvature] kind: expected 'standard' or 'synthetic', got {kind!r}")
    regime = cfg.get("curvature", "regime")
    if regime is not None:
        if regime not in REGIMES:
            raise ValidationError(f"[curvature] regime: expected one of {REGIMES}, got {regime!r}")
        if regime != data.regime:
            raise ValidationError(
                f"[curvature] regime = {regime!r} is inconsistent with int Q'bar = "
                f"{data.q_integral:.6g} (regime {data.regime!r})")
    return data


def parse_group(cfg: ExperimentConfig):
    """Generators given as 'g1 = a11 a12 a21 a22' with complex entries like 0.5+0.8660254j."""
    from .symmetry import SymmetryGroup
    if not cfg.parser.has_section("symmetry"):
        return None
    named = cfg.get("symmetry", "group")
    if named == "antipodal":
        return SymmetryGroup.antipodal()
    gens = []
    for key in sorted(cfg.parser.options("symmetry")):
        if not key.startswith("g"):
            continue
        raw = cfg.get("symmetry", key).split()
        try:
            vals = [complex(x) for x in raw]
        except ValueError:
            raise ValidationError(f"[symmetry] {key}: entries must be complex numbers") from None
        if len(vals) != 4:
            raise ValidationError(f"[symmetry] {key}: need four entries a11 a12 a21 a22")
        gens.append(np.array(vals).reshape(2, 2))
    if named is not None and named != "antipodal":
        raise ValidationError(f"[symmetry] group: unknown name {named!r}")
    return SymmetryGroup(gens) if gens else None

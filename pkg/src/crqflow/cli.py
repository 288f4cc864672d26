"""Command-line entry point: ``crqflow <scenario> --config FILE --out DIR``.

Exit codes: 0 success, 2 validation error, 3 numerical abort, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCENARIOS, ExperimentConfig, load_config, parse_curvature, parse_function, parse_group
from .errors import NonConvergence, NumericalAbort, ValidationError
from .frame import CONVENTION_TAG
from .gauge import GAUGE_TAG

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_NONCONVERGENCE = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def header(cfg: ExperimentConfig) -> dict:
    return {"config_sha256": cfg.sha256, "convention": CONVENTION_TAG, "gauge": GAUGE_TAG,
            "version": __version__, "scenario": cfg.scenario, "seed": cfg.seed}


def _plain(x):
    from .diagnostics import _plain as p
    return p(x)


def write_json(path: Path, cfg: ExperimentConfig, body: dict):
    doc = {"header": header(cfg), **_plain(body)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_csv(path: Path, cfg: ExperimentConfig, columns, rows):
    with open(path, "w", newline="") as fh:
        for k, v in header(cfg).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def run_basis_check(cfg: ExperimentConfig, out: Path) -> int:
    from .basis import build_basis
    from .frame import frame_constants, sublaplacian, verify_frame_axioms
    from .operators import pprime_eigenvalue, pprime_rayleigh, qprime_standard
    from .basis import PluriSpace

    J = cfg.J
    basis = build_basis(J)
    grid = basis.default_grid()
    G = basis.gram(grid)
    gram_err = float(np.abs(G - np.eye(len(basis))).max())
    eig_ok = all(sublaplacian(e.poly).equals_on_sphere(e.poly * e.eigenvalue) for e in basis.elements)
    counts = {f"{b.j},{b.k}": n for b, n in basis.dimension_counts().items()}
    flags_ok = all(e.pluriharmonic == (e.bidegree.j == 0 or e.bidegree.k == 0) for e in basis.elements)
    mult = []
    for j in range(0, min(J, 6) + 1):
        sym = float(pprime_eigenvalue(j))
        ray = pprime_rayleigh(j, grid) if j > 0 else 0.0
        mult.append({"j": j, "symbolic": sym, "rayleigh": ray})
    mult_ok = all(abs(m["symbolic"] - m["rayleigh"]) <= 1e-8 * max(1.0, m["symbolic"]) for m in mult)
    fc = frame_constants()
    qs = qprime_standard(PluriSpace(max(J, 2)))
    anchor = qs.q_integral / (16 * math.pi ** 2) - 1.0
    axioms = verify_frame_axioms()
    report = {"J": J, "basis_size": len(basis), "gram_max_error": gram_err,
              "eigen_exact": eig_ok, "pluri_flags_ok": flags_ok, "dimension_counts": counts,
              "pprime_multipliers": mult, "multipliers_agree": mult_ok,
              "volume": fc.volume, "webster_curvature": float(fc.webster_curvature),
              "qprime_times_volume_relative_error": anchor, "frame_axioms": axioms}
    ok = gram_err < 1e-12 and eig_ok and flags_ok and mult_ok and abs(anchor) < 1e-10
    report["status"] = "green" if ok else "red"
    write_json(out / "basis_check.json", cfg, report)
    return EXIT_OK if ok else EXIT_NUMERICAL


def _flow_config(cfg: ExperimentConfig, group):
    from .flow import FlowConfig
    kw = {}
    for key in ("initial_step", "rtol", "atol", "safety", "max_step", "min_step", "drift_tol",
                "grad_tol", "max_time", "fixed_step", "overflow_cap"):
        v = cfg.getfloat("flow", key, positive=True)
        if v is not None:
            kw[key] = v
    for key in ("stagnation_window", "max_steps"):
        v = cfg.getint("flow", key, minimum=1)
        if v is not None:
            kw[key] = v
    enforce = cfg.get("symmetry", "enforce", "false").lower() in ("1", "true", "yes")
    return FlowConfig(symmetry=group, enforce_symmetry=enforce, **kw)


def run_flow(cfg: ExperimentConfig, out: Path) -> int:
    from . import diagnostics as D
    from . import flow
    from .basis import PluriSpace
    from .errors import OverflowGuardError
    from .operators import CRITICAL_MASS, coeffs_to_triples, solve_ell
    from .symmetry import invariance_drift

    space = PluriSpace(cfg.J)
    data = parse_curvature(cfg, space)
    data.check_hypotheses()
    group = parse_group(cfg)
    fcfg = _flow_config(cfg, group)
    u0 = parse_function(cfg, "u0", space) if cfg.parser.has_section("u0") else space.zeros()
    if group is not None and not group.is_invariant(data.f, space, 1e-9):
        raise ValidationError("[f] is not invariant under the declared symmetry group")
    summary = {"model_problem": data.label != "standard", "curvature": data.to_dict()}
    if group is not None:
        fixed = group.fixed_set()
        summary["sigma"] = fixed.describe()
        u0_on_X, _ = flow.project_to_X(u0, data)
        summary["critical_threshold"] = D.critical_threshold_check(u0_on_X, data, fixed)
    try:
        traj = flow.run(u0, data, fcfg)
    except OverflowGuardError as exc:
        summary.update(aborted="overflow guard", message=str(exc))
        write_json(out / "summary.json", cfg, summary)
        raise
    rows = traj.rows
    write_csv(out / "trajectory.csv", cfg, flow.CSV_COLUMNS, rows)
    summary.update(flow.summary(traj, data))
    summary["energy_identity_relative_error"] = D.energy_identity_check(traj)
    mean = traj.column("mean_u")
    summary["mean_drift"] = float(np.max(np.abs(mean - mean[0])))
    if data.regime == "zero":
        ell = solve_ell(data)
        summary["int_f_e2ell"] = space.integrate(data.f_grid() * np.exp(2 * space.synthesize(ell)))
        cls = flow.classify_zero_regime(traj.final, data)
        summary["delta"] = cls["delta"]
        summary["shifted_residual"] = cls.get("shifted_residual")
    if traj.converged:
        try:
            summary["rate"] = D.rate_fit(traj, data)
        except ValidationError as exc:
            summary["rate"] = {"error": str(exc)}
    if group is not None:
        drift = invariance_drift(traj.states[:: max(1, len(traj.states) // 50)], group, space)
        summary["invariance_drift_max"] = float(drift.max())
    pm = D.peak_mass(traj.final, space, data.f_grid(), cfg.getfloat("flow", "ball_radius", 0.5))
    summary["peak_ball_mass"] = pm
    summary["concentrated"] = pm["mass"] > 0.9 * CRITICAL_MASS
    uc, ut = coeffs_to_triples(traj.final, space)
    write_json(out / "final_state.json", cfg, {"curvature": data.to_dict(), "t": traj.rows[-1][0],
                                               "u": {"constant": uc, "modes": ut}})
    write_json(out / "summary.json", cfg, summary)
    if not traj.converged:
        raise NonConvergence(f"flow did not converge ({traj.reason})")
    return EXIT_OK


def run_center(cfg: ExperimentConfig, out: Path) -> int:
    from .basis import PluriSpace
    from .mobius import SphereAutomorphism, center, half_log_jacobian

    space = PluriSpace(cfg.J)
    u = parse_function(cfg, "u", space) if cfg.parser.has_section("u") else space.zeros()
    g = space.synthesize(u)
    planted = None
    pv = cfg.getfloats("center", "bubble_p")
    if pv is not None:
        if len(pv) != 4:
            raise ValidationError("[center] bubble_p: need four reals")
        r = cfg.getfloat("center", "bubble_r", 2.0, positive=True)
        h = SphereAutomorphism(np.array([pv[0] + 1j * pv[1], pv[2] + 1j * pv[3]]), r)
        g = g + half_log_jacobian(h, space.grid.z1, space.grid.z2)
        planted = h.to_dict()
    res = center(None, space, values=g, tol=cfg.getfloat("center", "tol", 1e-8, positive=True))
    write_json(out / "center.json", cfg, {"planted": planted, "p": [res.p[0].real, res.p[0].imag,
                                                                     res.p[1].real, res.p[1].imag],
                                          "r": res.r, "residual": res.residual, "starts_used": res.starts})
    return EXIT_OK


def run_ineq(cfg: ExperimentConfig, out: Path) -> int:
    from . import inequalities as I
    from .basis import PluriSpace

    space = PluriSpace(cfg.J)
    p = cfg.getfloats("ineq", "p", [1.0, 0.0, 0.0, 0.0])
    p = np.array([p[0] + 1j * p[1], p[2] + 1j * p[3]])
    n = cfg.getint("ineq", "samples", 500, minimum=1)
    sweep = I.random_deficit_sweep(space, n, cfg.getfloat("ineq", "max_norm", 5.0, positive=True),
                                   seed=cfg.seed)
    write_csv(out / "beckner_onofri_random.csv", cfg, ("sample", "norm", "deficit"),
              [(r["sample"], r["norm"], r["value"]) for r in sweep.rows])
    bub_space = PluriSpace(cfg.getint("ineq", "bubble_J", 32, minimum=1))
    radii = cfg.getfloats("ineq", "radii", [1.0, 1.5, 2.0, 3.0])
    bubbles = [{"r": r, "deficit": I.bubble_beckner_onofri(bub_space, p, r).value} for r in radii]
    adams = I.adams_sweep(bub_space, p, cfg.getfloats("ineq", "adams_radii", [1, 2, 4, 8]),
                          cfg.getfloats("ineq", "adams_exponents", [32.0, 64.0]))
    write_csv(out / "adams.csv", cfg, ("A", "r", "value"), [(a["A"], a["r"], a["value"]) for a in adams])
    report = {"random_min_deficit": sweep.value, "bubble_deficits": bubbles, "adams": adams,
              "J": cfg.J, "bubble_J": bub_space.J}
    a = cfg.getfloat("ineq", "mt_a")
    if a is not None:
        mt = I.improved_mt_scan(a, bub_space, p, cfg.getfloats("ineq", "mt_radii", [1, 2, 4, 8]))
        report["improved_mt"] = mt.to_dict()
    write_json(out / "ineq.json", cfg, report)
    return EXIT_OK


def run_nm(cfg: ExperimentConfig, out: Path) -> int:
    from .inequalities import nm_solver

    ms = [int(x) for x in cfg.getfloats("nm", "m", [1, 2])]
    n_max = cfg.getint("nm", "N_max", 6, minimum=1)
    starts = cfg.getint("nm", "starts", 100, minimum=1)
    jobs = [(m, N) for m in ms for N in range(1, n_max + 1)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        results = list(ex.map(lambda mn: nm_solver(mn[0], mn[1], starts=starts,
                                                   seed=cfg.seed + 1000 * mn[0] + mn[1]), jobs))
    rows = [{"m": r.m, "N": r.N, "verdict": r.verdict, "residual": r.residual, "starts": r.starts}
            for r in results]
    minimal = {}
    for r in results:
        if r.feasible and r.m not in minimal:
            minimal[r.m] = r.N
    write_csv(out / "nm.csv", cfg, ("m", "N", "verdict", "residual", "starts"),
              [(r["m"], r["N"], r["verdict"], r["residual"], r["starts"]) for r in rows])
    write_json(out / "nm.json", cfg, {"rows": rows, "minimal_N": {str(k): v for k, v in minimal.items()}})
    return EXIT_OK


def run_green(cfg: ExperimentConfig, out: Path) -> int:
    from .basis import PluriSpace
    from .operators import green_log_fit

    space = PluriSpace(cfg.getint("run", "J", 24, minimum=1))
    shell = cfg.getfloats("green", "shell", [0.5, 1.3])
    res = green_log_fit(space, shell=tuple(shell), n=cfg.getint("green", "points", 4000, minimum=10),
                        seed=cfg.seed)
    write_json(out / "green.json", cfg, res)
    return EXIT_OK


RUNNERS = {"basis-check": run_basis_check, "flow-run": run_flow, "center": run_center,
           "ineq": run_ineq, "nm": run_nm, "green": run_green}


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crqflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--rebuild-cache", action="store_true",
                        help="rebuild the cached spectral tables before running")
    return ap


def run_scenario(cfg: ExperimentConfig, out) -> int:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[cfg.scenario](cfg, out)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.scenario, args.seed, args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        from .cache import cache_dir, load_tables
        load_tables(cache_dir() / f"tables_J{cfg.J}", cfg.J, args.rebuild_cache)
        return run_scenario(cfg, out)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NonConvergence as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

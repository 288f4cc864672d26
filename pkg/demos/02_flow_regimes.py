"""One flow per curvature regime, with the diagnostics a reader would check first.

The four problems are small (J = 12) and run in a few seconds each.  For each
run we print the final energy, the Lagrange multiplier, the residual of the
limiting equation, the energy-identity error and the fitted decay exponent.

    python3 demos/02_flow_regimes.py
"""

import numpy as np

from crqflow import diagnostics as D
from crqflow import flow
from crqflow.basis import PluriSpace
from crqflow.config import monomial_field
from crqflow.operators import qprime_standard, synthetic_curvature
from crqflow.symmetry import SymmetryGroup

S = PluriSpace(12)
mf = lambda a, b, part, v: monomial_field(S, a, b, part, v)

problems = {
    # int Q'bar < 0 and f changes sign with inf f < 0
    "negative": (synthetic_curvature(S, -1.0, S.constant(-1.0) + mf(1, 0, "re", 0.5)),
                 mf(1, 0, "re", 0.2), None),
    # int Q'bar = 0: the mean of u is conserved along the flow
    "zero": (synthetic_curvature(S, mf(1, 1, "re", 3.0), S.constant(0.25) + mf(1, 0, "re", 1.0)),
             mf(0, 1, "re", 0.2), None),
    "positive": (synthetic_curvature(S, 2.0, S.constant(2.0) + mf(1, 0, "re", 1.0)), S.zeros(), None),
    # the standard sphere with antipodal symmetry (no fixed points)
    "critical": (qprime_standard(S, S.constant(4.0) + mf(2, 0, "re", 0.4)),
                 mf(2, 0, "im", 0.1), SymmetryGroup.antipodal()),
}

print(f"{'regime':9} {'steps':>5} {'E_final':>12} {'lambda':>12} {'residual':>9} {'identity':>9} {'beta':>7}")
for name, (data, u0, G) in problems.items():
    tr = flow.run(u0, data, flow.FlowConfig(max_time=300, symmetry=G))
    s = flow.summary(tr, data)
    fit = D.rate_fit(tr, data)
    print(f"{name:9} {s['accepted_steps']:5d} {s['E_final']:12.6f} {s['lambda']:12.6g} "
          f"{s['residual']:9.1e} {D.energy_identity_check(tr):9.1e} {fit.beta:7.3g}"
          + ("  (faster than any power)" if fit.super_polynomial else ""))
    if name == "zero":
        cls = flow.classify_zero_regime(tr.final, data)
        mean = tr.column("mean_u")
        print(f"{'':9} mean drift {np.max(np.abs(mean - mean[0])):.1e}; delta = {cls['delta']}, "
              f"shifted residual {cls['shifted_residual']:.1e}")

print("\nIn the zero regime lambda is not normalised; its sign gives delta and the")
print("shift v = u + 1/2 ln|lambda| solves the equation with f replaced by delta f.")

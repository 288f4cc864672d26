"""The critical case with a symmetry group that has fixed points.

G = <diag(w, 1)>, w = e^{2 pi i / 3}, fixes the circle {z1 = 0}.  The
threshold compares sup of f on that circle with exp(-E(u0) / 16 pi^2).

* f = 4 + 2 Re z2 exceeds the threshold on the circle; the flow piles mass
  into a small ball around the maximum of f.
* f = 0.1 + 10 Re z1^3 is 0.1 on the circle; the symmetric flow converges.

The first run is done at J = 16 here for speed; the ball mass keeps growing
with J (see the README for the J = 32 numbers used by the acceptance suite).

    python3 demos/05_critical_threshold.py
"""

import numpy as np

from crqflow import diagnostics as D
from crqflow import flow
from crqflow.basis import PluriSpace
from crqflow.config import monomial_field
from crqflow.operators import CRITICAL_MASS, qprime_standard
from crqflow.symmetry import SymmetryGroup

G = SymmetryGroup([np.diag([np.exp(2j * np.pi / 3), 1])])
print("fixed set:", G.fixed_set().describe())

S = PluriSpace(16)
data = qprime_standard(S, S.constant(4.0) + monomial_field(S, 0, 1, "re", 2.0))
print("threshold:", D.critical_threshold_check(flow.project_to_X(S.zeros(), data)[0], data, G.fixed_set()))
tr = flow.run(S.zeros(), data, flow.FlowConfig(max_time=300, symmetry=G))
for radius in (0.3, 0.5):
    pm = D.peak_mass(tr.final, S, data.f_grid(), radius)
    print(f"  ball radius {radius}: mass {pm['fraction_of_critical']:.3f} x 16 pi^2 ({pm['nodes']} nodes)")
print(f"  max u at the end: {S.synthesize(tr.final).max():.2f}")

S = PluriSpace(12)
data = qprime_standard(S, S.constant(0.1) + monomial_field(S, 3, 0, "re", 10.0))
u0 = monomial_field(S, 3, 0, "re", 0.5)
print("\nthreshold:", D.critical_threshold_check(flow.project_to_X(u0, data)[0], data, G.fixed_set()))
tr = flow.run(u0, data, flow.FlowConfig(max_time=300, symmetry=G, enforce_symmetry=True))
print({k: v for k, v in flow.summary(tr, data).items() if k in ("converged", "lambda", "residual", "E_final")})
print(f"peak ball mass: {D.peak_mass(tr.final, S, data.f_grid(), 0.5)['mass'] / CRITICAL_MASS:.3f} x 16 pi^2")

"""Sphere automorphisms, their bubbles, and undoing a bubble by centring.

1. h_{p,r} is a 3x3 projective matrix; its ball point is tanh(ln r) p.
2. The bubble 1/2 ln J(h) has an explicit series; compare it with the grid.
3. Energy and constraint are unchanged by pulling back (needs a fine band).
4. centre() finds the automorphism that balances e^{2u}.

    python3 demos/03_bubbles_and_centering.py
"""

import numpy as np

from crqflow import flow, mobius as M
from crqflow.basis import PluriSpace
from crqflow.operators import qprime_standard

p = np.array([0.6, 0.8j])
h = M.SphereAutomorphism(p, 3.0)
print("ball point:", np.round(h.ball_point, 12), " expected", np.round(np.tanh(np.log(3.0)) * p, 12))

for J in (16, 32, 48):
    S = PluriSpace(J)
    err = np.abs(S.synthesize(M.bubble_coefficients(S, p, 2.0))
                 - M.half_log_jacobian(M.SphereAutomorphism(p, 2.0), S.grid.z1, S.grid.z2)).max()
    print(f"J = {J:2d}: max |truncated bubble - closed form| at r = 2 is {err:.1e}")

S0, S = PluriSpace(4), PluriSpace(48)
u = S0.random_field(np.random.default_rng(0), J=3, scale=0.3)
data = qprime_standard(S)
E0 = flow.energy(S.embed(u, S0), data)
for r in (1.0, 2.0, 3.0):
    pb = M.pullback(u, M.SphereAutomorphism(p, r), S, u_space=S0)
    print(f"r = {r}: |E(v) - E(u)| = {abs(flow.energy(pb.coefficients, data) - E0):.1e}, "
          f"L2 truncation {pb.truncation_error:.1e}")

C = PluriSpace(32)
g = M.half_log_jacobian(M.SphereAutomorphism(p, 5.0), C.grid.z1, C.grid.z2)
res = M.center(None, C, values=g)
print(f"\ncentring a bubble planted at (p, r = 5): found r = {res.r:.6f}, p = {np.round(res.p, 6)},"
      f" residual {res.residual:.1e} after {res.starts} start(s)")
print("(the inverse of h_{p,r} is h_{-p,r} in the r >= 1 chart, hence the sign)")

"""Fewest weighted points on S^3 that average every mean-zero polynomial of degree <= m to zero.

Degree 1 needs an antipodal pair.  For degree 2 the 14 complex moment
conditions carry more real constraints than four points can meet; this demo
prints the best residual found at each N.

    python3 demos/06_point_configurations.py
"""

from crqflow.inequalities import moment_exponents, nm_solver

for m in (1, 2):
    print(f"m = {m}: {len(moment_exponents(m))} monomials")
    for N in range(1, 6 if m == 2 else 3):
        res = nm_solver(m, N, starts=40, seed=N)
        print(f"  N = {N}: {res.verdict:32} best residual {res.residual:.2e} ({res.starts} starts)")

"""Where the numbers come from: frame constants, the volume and the two spectra.

Everything printed here is derived from the three frame vector fields and the
contact form; nothing is typed in by hand.

    python3 demos/01_frame_and_spectrum.py
"""

import math

from crqflow.frame import CONVENTION_TAG, frame_constants, verify_frame_axioms
from crqflow.operators import pprime_eigenvalue, pprime_rayleigh, sublaplacian_eigenvalue

fc = frame_constants()
print("convention:", CONVENTION_TAG)
print("axiom residuals:", verify_frame_axioms())
print(f"Levi form h = {fc.levi}, Webster curvature R = {fc.webster_curvature}, torsion A = {fc.torsion}")
print(f"volume V = {fc.volume:.15f}  (4 pi^2 = {4 * math.pi ** 2:.15f})")
print(f"Q' = R^2 - 4|A|^2 = {fc.qprime};  Q' V / 16 pi^2 = {float(fc.qprime) * fc.volume / (16 * math.pi ** 2):.15f}")

print("\n j   P'bar (symbolic)   P'bar (quadrature)   Delta_b")
for j in range(0, 7):
    ray = pprime_rayleigh(j) if j else 0.0
    print(f"{j:2d}   {str(pprime_eigenvalue(j)):>16}   {ray:18.12f}   {str(sublaplacian_eigenvalue(j)):>7}")

print("\nThe pluriharmonic multiplier is 4j(j+1) >= 4j^2 = 4 (Delta_b eigenvalue)^2,")
print("so int u P'bar u >= 4 ||Delta_b u||^2 holds mode by mode.")

"""Build the competitor for (a, b) = (3, 4), eps = 1, and account for
every bit of length.

gamma is cut short below rho (gain L(gamma_rho) - L(kappa_rho)), the
third coordinate error of the cut is paid back by a small rectangle at the
far end (cost 2 delta (eps + eps^q)), and delta is tuned so the lift closes
exactly.
"""

import numpy as np

from srlab.competitor import length_gain, rectangle_cost, rho_sweep, solve_params, verify_competitor
from srlab.stokes import delta3_cor, delta3_cut
from srlab.structure import StructureDef

s = StructureDef.polynomial(3, 4)
cp = solve_params(1.0, s)
print(f"rho = {cp.rho:.6g}, delta = {cp.delta:.6g}")
print(f"cut error {delta3_cut(cp.rho, s):.6e}, rectangle {delta3_cor(cp.delta, 1.0, s):.6e}")

rep = verify_competitor(cp, s)
print(f"L(gamma) = {rep.L_gamma:.12f}")
print(f"L(omega) = {rep.L_omega:.12f}")
print(f"gain  {length_gain(cp.rho, s):.6e}  -  rectangle {rectangle_cost(cp, s):.6e}"
      f"  =  {rep.gain_net:.6e}")
print(f"x3 at the end of the lift: {rep.constraint_residual:.2e}")

# the safety factor trades absolute gain for margin; the best rho is larger
print("\nrho sweep (delta balanced each time):")
for rho, delta, gain in rho_sweep(1.0, s, np.geomspace(0.01, 0.5, 8)):
    print(f"  rho {rho:8.4f}  delta {delta:.3e}  net gain {gain:+.3e}")

# and (2, 5) never wins
worst = max(g for _, _, g in rho_sweep(0.5, StructureDef.polynomial(2, 5), np.geomspace(1e-6, 0.25, 30)))
print(f"\n(2, 5): best net gain over rho = {worst:.3e}")

"""Normal geodesics of the built-in structures, and why gamma is not one.

Heisenberg geodesics project to circles; the Martinet line x = (0, t, 0)
is both abnormal and normal.  For the polynomial structures no covector
makes gamma satisfy the normal equations: the residual stays bounded away
from zero over the whole circle of covectors.
"""

from srlab.hamiltonian import (HamiltonianState, convergence_slope, fit_circle, ham_flow,
                               min_normality_residual)
from srlab.structure import BUILTINS, StructureDef

st0 = HamiltonianState((0.0, 0.0, 0.0), (0.0, 1.0, 2.0))
tr = ham_flow(st0, 3.0, StructureDef.heisenberg(), 1e-3)
centre, R, dev = fit_circle(tr.x[:, :2])
print(f"Heisenberg: circle centre {centre[0]:.6f}, {centre[1]:.6f}, radius {R:.9f}, spread {dev:.1e}")

# start off the line x1 = 0, where the Martinet flow is integrated exactly
moving = HamiltonianState((0.1, 0.2, 0.0), (0.3, 0.8, 2.0))
for s in BUILTINS:
    slope, _ = convergence_slope(moving, 1.0, s)
    drift = ham_flow(st0, 1.0, s).energy_drift
    print(f"{s.label():<14} energy drift {drift:.1e}, observed order {slope:.3f}")

line = ham_flow(HamiltonianState((0, 0, 0), (0, 1, 0)), 1.0, StructureDef.martinet())
print("Martinet line endpoint:", line[len(line) - 1].x)

for a, b in [(2, 3), (2, 5), (3, 4), (4, 4)]:
    r, p = min_normality_residual(StructureDef.polynomial(a, b))
    print(f"({a}, {b}): min normality residual {r:.3e} at p = ({p[0]:+.3f}, {p[1]:+.3f})")

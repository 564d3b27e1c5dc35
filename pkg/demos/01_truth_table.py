"""Which (a, b) admit the cut-and-rectangle competitor?

The margin (c/2) max(a, b) + 2 - 3q is exact rational arithmetic; next to
it we print the exponent gap between rectangle cost and cut gain, which is
what actually decides the small-rho behaviour.
"""

from srlab.competitor import criterion
from srlab.structure import StructureDef

print(f"{'a':>2} {'b':>2}  {'margin':>7}  {'gap':>7}  verdict")
for a in range(2, 6):
    for b in range(2, 10):
        rep = criterion(StructureDef.polynomial(a, b))
        gap = "-" if rep.exponent_gap is None else f"{rep.exponent_gap:7.3f}"
        print(f"{a:>2} {b:>2}  {rep.margin:7.3f}  {gap:>7}  "
              f"{'competitor' if rep.constructible else '.'}")

# c large enough rescues a = 2, b = 5
print("(2, 5) with c = 4:", criterion(StructureDef.polynomial(2, 5, 4)).constructible)

"""
The orbit-sum identity, length by length
=========================================

For a finite group the signed sum of the counting series over the orbit of
a point equals the orbit sum times a power of the step polynomial.  Check it
at random points modulo 2^61 - 1, then break one table cell.
"""

from orthantwalks import group_bfs, verify_orbit_identity
from orthantwalks.corpus import load_models

model = next(m for m in load_models() if not m.orbit_sum_zero)
print(model.label, model.steps)

g = group_bfs(model.stepset)
print("group order", g.order)

holds = verify_orbit_identity(model.stepset, g, N=20)
print("signed:", all(holds))

# without the signs the identity fails from the first step on
print("unsigned:", verify_orbit_identity(model.stepset, g, N=6, signed=False))

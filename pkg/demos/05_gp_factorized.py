"""Factorized density matrices g_k = |phi^k><phi^k| solve the GP hierarchy.

The one-particle kernel is advanced along the NLS flow and inserted into
the first GP equation; the residual shrinks by four when the step halves,
i.e. it is the time-difference error and nothing else.
"""
import numpy as np

from hierlab.flows import evolve
from hierlab.gp import factorized_energy, factorized_kernel, gp3_residual, w3_spot_check
from hierlab.grid import PeriodicGrid, random_band_limited
from hierlab.hierarchy import build, invariant

grid = PeriodicGrid(np.pi, 256)
table = build(6, kappa=1)
phi = random_band_limited(grid, 3, seed=0, amplitude=0.5)

g1 = factorized_kernel(phi, 1)
print(f"tr g1 = {g1.trace().real:.10f},  I_1 = {invariant(table, 1, phi):.10f}")
print(f"energy split over particle numbers, n=4: {factorized_energy(table, 4, phi):.10f}")
a, b = w3_spot_check(table, phi, 32)
print(f"two-body energy as a kernel integral: {a.real:.10f} vs {b.real:.10f}")

prev = None
for dt in (1e-3, 5e-4):
    traj = evolve(table, 3, phi, dt, 2, "strang", 1)
    r = max(v for _, v in gp3_residual(traj, sub_N=32))
    print(f"dt={dt:.0e}: GP residual {r:.2e}" + (f"  (ratio {prev / r:.2f})" if prev else ""))
    prev = r

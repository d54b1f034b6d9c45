"""Spectral side: monodromy trace, quasi-momentum and its large-lambda expansion.

The trace of the monodromy matrix is constant along the NLS flow; the
quasi-momentum p(lambda) + lambda L is asymptotically a series in 1/lambda
whose coefficients are the invariants.
"""
import numpy as np

from hierlab.flows import evolve
from hierlab.grid import PeriodicGrid, random_band_limited
from hierlab.hierarchy import build
from hierlab.lax import LaxContext, asymptotic_residual, monodromy, monodromy_trace, rmatrix_residual

kappa = 1
table = build(6, kappa)
grid = PeriodicGrid(np.pi, 256)
phi = random_band_limited(grid, 6, seed=1, amplitude=0.25)

M = monodromy(LaxContext.from_phi(phi, kappa, 5.0))
print(f"det T(lambda=5) - 1 = {abs(M.det - 1):.1e}")

traj = evolve(table, 3, phi, 1e-3, 1000, "strang", 250)
for t, s in zip(traj.times, traj.states):
    print(f"  t={t:.2f}  tr T(5) = {monodromy_trace(LaxContext.from_phi(s, kappa, 5.0)):.12f}")

g3 = PeriodicGrid(3.0, 256)
ctx = LaxContext.from_phi(random_band_limited(g3, 1, 0, 0.1), kappa, 20.0)
print("\nresidual of the 1/lambda series:")
for K in (1, 2, 3):
    rows = asymptotic_residual(ctx, [20.0, 40.0, 80.0], table, K)
    slope = np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
    print(f"  K={K}: " + "  ".join(f"{r[1]:.1e}" for r in rows) + f"   decay exponent {slope:.2f}")

print(f"\nr-matrix identity at (2, 5): {rmatrix_residual(LaxContext.from_phi(phi, kappa, 2.0), 5.0):.1e}")

"""The invariants Poisson-commute: brackets {I_n, I_m} on random data.

For each pair n < m <= 6 the bracket is computed from the variational
derivatives and divided by the natural size of the integrand, so that a
value near machine precision means the cancellation is exact.
"""
import itertools

import numpy as np

from hierlab.grid import PeriodicGrid, random_band_limited
from hierlab.hierarchy import build
from hierlab.poisson import bracket_L2, bracket_L2_V

grid = PeriodicGrid(np.pi, 256)
for kappa in (1, -1):
    table = build(6, kappa)
    phi = random_band_limited(grid, 12, seed=0)
    phi1, phi2 = random_band_limited(grid, 12, 1), random_band_limited(grid, 12, 2)
    worst = max(bracket_L2(table, n, m, phi).normalized for n, m in itertools.combinations(range(1, 7), 2))
    worst_mixed = max(bracket_L2_V(table, n, m, phi1, phi2).normalized
                      for n, m in itertools.combinations(range(1, 7), 2))
    print(f"kappa={kappa:+d}: max normalized bracket {worst:.2e}, on pairs of states {worst_mixed:.2e}")

# the antisymmetry is exact in floating point, not just to rounding
table = build(6, 1)
phi = random_band_limited(grid, 12, seed=0)
print("\n{I_3, I_5} + {I_5, I_3} =", bracket_L2(table, 3, 5, phi).value + bracket_L2(table, 5, 3, phi).value)

"""Symmetric tensors as sums of tensor powers of vectors.

4 x1 x2 = (x1 + x2)^2 - (x1 - x2)^2 is the smallest example; the generic
solver reproduces it, a symmetric matrix, and a random cubic tensor.
"""
import numpy as np

from hierlab.gp import reconstruct, sym_rank1_decompose, symmetrize

T = reconstruct([(1, [1, 1]), (-1, [1, -1])], 2, 2)
print("4 x1 x2 as a tensor:\n", T.real)

for label, A in (("symmetric 3x3", symmetrize(np.arange(9.0).reshape(3, 3)).entries),
                 ("random 3x3x3", symmetrize(np.random.default_rng(0).standard_normal((3, 3, 3))).entries)):
    terms = sym_rank1_decompose(A)
    err = np.max(np.abs(reconstruct(terms, A.shape[0], A.ndim) - A))
    print(f"{label}: {len(terms)} rank-one terms, reconstruction error {err:.1e}")

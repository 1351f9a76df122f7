"""
Fewer samples than basis terms
==============================

With M < N the least-squares problem is underdetermined.  Greedy
forward selection still finds a sparse expansion when one exists.
"""

import numpy as np

from ddpce.basis import build_basis
from ddpce.regression import OLS, assemble_design, sparse_fit
from ddpce.sampling import InputSpec, draw_samples

inputs = InputSpec(("uniform(-1, 1)",) * 4)
samples = draw_samples(inputs, 40, seed=7)
basis = build_basis(samples, 4)
psi = assemble_design(basis, samples)
print(f"M = {psi.shape[0]}, N = {psi.shape[1]}")

truth = np.zeros(basis.n_terms)
truth[[0, 2, 9, 30]] = [1.0, -0.7, 0.4, 0.25]
y = psi @ truth

res = sparse_fit(psi, y, OLS, epsilon=1e-10)
print("selected terms:", sorted(res.active_set.tolist()))
print("max coefficient error:", np.abs(res.coefficients - truth).max())

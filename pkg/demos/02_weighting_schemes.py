"""
Christoffel values and tempered weights
=======================================

Compare ordinary, Christoffel and tempered weighting on a small
design where a few samples carry large leverage.
"""

import numpy as np

from ddpce.basis import build_basis
from ddpce.regression import CLS, OLS, Scheme, assemble_design, christoffel, fit, weights
from ddpce.sampling import SampleSet

rng = np.random.default_rng(3)
x = rng.standard_t(df=4, size=(120, 2))
y = np.sin(x[:, 0]) + 0.3 * x[:, 1] ** 2
samples = SampleSet(x, y)

basis = build_basis(samples, 3)
psi = assemble_design(basis, samples)
diag = christoffel(psi)

# leverage adds up to M * N
print(f"sum K = {diag.K.sum():.6f}, M*N = {psi.shape[0] * psi.shape[1]}")
print(f"kappa = {diag.kappa:.2f}, stability score = {diag.score_lr:.3f}")

# %%
# The weight family: exponent 0 is OLS and exponent -1 is CLS.
for scheme in (OLS, Scheme.tempered(-0.5), CLS):
    w = weights(diag, scheme).w
    res = fit(psi, y, scheme)
    print(
        f"{str(scheme):>16}  w range [{w.min():.3f}, {w.max():.3f}]  "
        f"weighted score {res.weighted_diagnostics.score_lr:.3f}  "
        f"rms {res.residual_rms:.4f}"
    )

"""
Orthonormal polynomials straight from data
==========================================

Build a univariate basis from skewed samples and check that it is
orthonormal under the sample average.  No density is assumed anywhere.
"""

import numpy as np

from ddpce.basis import build_basis, build_univariate, build_univariate_stieltjes
from ddpce.sampling import InputSpec, draw_samples

rng = np.random.default_rng(0)
x = rng.lognormal(mean=0.0, sigma=0.5, size=2000)

# Gram-Schmidt on the standardized samples
phi = build_univariate(x, 5)
values = phi(x)
gram = values.T @ values / x.size
print("max |G - I| (Gram-Schmidt):", np.abs(gram - np.eye(6)).max())

# the same basis from the moment-based three-term recurrence
alt = build_univariate_stieltjes(x, 5)
print("max coefficient gap vs recurrence:", np.abs(phi(x) - alt(x)).max())

# coefficients in the original coordinate, lowest power first
np.set_printoptions(precision=4, suppress=True)
print("phi_2(x) coefficients:", phi.coeffs[2])

# %%
# Several inputs: a total-degree tensor basis.  Mixed continuous and
# discrete inputs are handled the same way.
inputs = InputSpec(("uniform(0.8, 1.2)", "discrete_range(0, 23)", "discrete_range(2, 8)"))
samples = draw_samples(inputs, 300, seed=1)
basis = build_basis(samples, 3)
print("terms:", basis.n_terms)
print("first multi-indices:", list(basis.multi_index)[:6])

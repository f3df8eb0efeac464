"""Log-determinant entropy and mutual information on small covariances.

Run with ``python demos/ldmi_basics.py``.
"""

import numpy as np

from corinfomax import SecondOrderPair, ld_entropy, ldmi, ldmi_symmetric

# A unit-variance scalar pair with correlation rho.  With eps = 0 the LDMI is
# the Gaussian mutual information -0.5 * log(1 - rho^2).
for rho in (0.0, 0.5, 0.9, 0.99):
    pair = SecondOrderPair([[1.0]], [[1.0]], [[rho]])
    print(f"rho={rho:<5} ldmi={ldmi(pair, 0.0):.6f} closed form={-0.5 * np.log(1 - rho**2):.6f}")

# Entropy of a diagonal covariance: half the log-determinant plus a constant.
print("h(diag(2, 3)) =", ld_entropy(np.diag([2.0, 3.0]), 0.0))

# Vector case from samples.  y is a noisy linear map of x, so the two share
# information; shuffling the columns of y destroys it.
rng = np.random.default_rng(0)
x = rng.normal(size=(3, 5000))
y = rng.normal(size=(2, 3)) @ x + 0.5 * rng.normal(size=(2, 5000))
coupled = SecondOrderPair.from_samples(x, y)
shuffled = SecondOrderPair.from_samples(x, y[:, rng.permutation(5000)])
print("coupled  ldmi:", ldmi_symmetric(coupled, 1e-8))
print("shuffled ldmi:", ldmi_symmetric(shuffled, 1e-8))

# The symmetric form is the average of the two directions.
print("directions:", ldmi(coupled, 1e-8), ldmi(coupled.swapped(), 1e-8))

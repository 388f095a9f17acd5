"""Partition-function zeros of a small ferromagnet.

Write Z as a polynomial in the fugacity z = exp(-2h) with a uniform field h.
For ferromagnetic couplings every root lies on |z| = 1. An antiferromagnet
breaks this, which is a useful sanity check that the circle is not forced
by the numerics.
"""

import numpy as np

from ferromf import SpinSystem, lee_yang_zeros
from ferromf.models import random_ferromagnet

rng = np.random.default_rng(7)
ferro = random_ferromagnet(10, rng, j_max=0.6)
ly = lee_yang_zeros(ferro)
print("ferromagnet, n=10")
for z in sorted(ly.zeros, key=np.angle):
    print(f"  z = {z.real:+.6f} {z.imag:+.6f}i   |z| = {abs(z):.15f}")
print(f"max | |z| - 1 | = {ly.max_modulus_deviation:.2e}\n")

# Flip the sign of the couplings. SpinSystem insists on J >= 0, so go
# through the unchecked constructor on purpose.
anti = SpinSystem.unchecked(-ferro.couplings, ferro.fields)
print("same couplings with the sign flipped")
print(f"max | |z| - 1 | = {lee_yang_zeros(anti).max_modulus_deviation:.3f}")

"""Two ways to make each coupling small: long range and dilution.

Kac couplings spread a fixed total strength beta over ~1/lambda
neighbours, so the center-site residual should shrink like lambda. The
diluted model keeps each bond with probability p and weights it by
beta/(n p); the residual of a single spin shrinks as n grows.
Large boxes use the heat-bath sampler and its conditional-mean estimator.
"""

import math

import numpy as np

from ferromf import gibbs_exact
from ferromf.models import DilutedSpec, KacSpec, diluted, kac, kac_center
from ferromf.sampler import glauber_estimate

beta, h = 0.8, 0.5
print("Kac, d=1, gaussian kernel, L*lambda = 8")
for lam, L in ((0.8, 10), (0.4, 20), (0.2, 40)):
    spec = KacSpec(1, L, lam, beta, h)
    s, c = kac(spec), kac_center(spec)
    if L <= 20:
        m, how = gibbs_exact(s).m, "exact"
    else:
        m, how = glauber_estimate(s, 400_000, 5000, seed=1).m_cond, "sampled"
    r = abs(m[c] - math.tanh(h + s.couplings[c] @ m))
    # scale against lambda^d / (h |log h|), the natural reference for the constant
    ref = lam / (h * abs(math.log(h)))
    print(f"  lambda={lam:<4} L={L:<3} residual={r:.3e}  residual/lambda={r / lam:.4f}  residual/ref={r / ref:.4f}  ({how})")

# The residual of one spin fluctuates from graph to graph on the scale
# beta / sqrt(n p), so look at quartiles over several graphs.
print("\ndiluted, beta=0.8, h=0.4, p=0.05, 20 graphs per size")
for n in (200, 800, 2000):
    vals = []
    for seed in range(20):
        s = diluted(DilutedSpec(n, 0.8, 0.05, 0.4, seed))
        m = glauber_estimate(s, 4000, 500, seed).m_cond
        vals.append(abs(m[0] - math.tanh(0.4 + 0.8 * m.mean())))
    q1, med, q3 = np.percentile(vals, [25, 50, 75])
    print(f"  n={n:<5} residual quartiles {q1:.3e} {med:.3e} {q3:.3e}")

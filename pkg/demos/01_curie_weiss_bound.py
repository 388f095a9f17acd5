"""How good is naive mean field on the Curie-Weiss model?

For the fully connected ferromagnet the exact magnetization comes from a
sum over the N + 1 magnetization sectors, so we can look at the residual
|m - tanh(h + J m)| for sizes far beyond brute-force enumeration and put it
next to the a priori bound.
"""

import math

from ferromf import NormTriple, curie_weiss_exact, scalar_curie_weiss, theorem_bound

beta, h = 1.5, 0.3

print(f"Curie-Weiss at beta={beta}, h={h}")
print(f"infinite-volume mean-field root: {scalar_curie_weiss(h, beta):.10f}\n")
print(f"{'N':>7} {'exact m':>14} {'residual':>12} {'N*residual':>11} {'bound':>10}")

for n in (10, 100, 1000, 10_000, 100_000):
    m, _ = curie_weiss_exact(n, beta, h)
    # every spin sees the same field from its n - 1 neighbours
    row = beta * (n - 1) / n
    resid = abs(m - math.tanh(h + row * m))
    rhs = theorem_bound(NormTriple(h, row, beta / n))
    print(f"{n:>7} {m:>14.10f} {resid:>12.3e} {n * resid:>11.4f} {rhs:>10.3e}")

# The residual times N settles to a constant: the error is O(1/N), the same
# order as the bound, which is driven by the largest single coupling beta/N.

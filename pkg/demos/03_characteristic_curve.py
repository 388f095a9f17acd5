"""Following one spin as its couplings are switched off.

Scale the couplings of spin 0 by t and move its field along
dw/dt = -J_0^T m(t, w(t)). At t = 0 the spin is free, so its magnetization
is tanh(w(0)); along the way m_0 barely moves. The script prints the curve
and checks the end-to-end estimate.
"""

import math

import numpy as np

from ferromf.dynamics import characteristic_curve, verify_final_bound, verify_lemma2
from ferromf.models import random_ferromagnet

rng = np.random.default_rng(3)
system = random_ferromagnet(8, rng, j_max=0.25, h_range=(0.4, 1.0))
trace = characteristic_curve(system, steps=200)

print(f"{'t':>5} {'w0(t)':>10} {'drift':>10} {'m0(t)':>10}")
for k in range(0, 201, 25):
    print(f"{trace.times[k]:5.2f} {trace.w1_values[k]:10.6f} {trace.drift_values[k]:10.6f} {trace.m1_values[k]:10.6f}")

m0 = trace.m1_values[0]
print(f"\nexact m0 = {m0:.8f}, tanh(w0(0)) = {math.tanh(trace.w1_values[-1]):.8f}")

fb = verify_final_bound(system, trace=trace)
l2 = verify_lemma2(system, system.couplings[:, 0], trace=trace)
print(f"|m0 - tanh(w0(0))| = {fb.lhs:.3e}   allowed {fb.rhs:.3e}")
print(f"drift of J_0^T m along the curve = {l2.sup_deviation:.3e}   allowed {l2.bound:.3e}")
print(f"single-site residual = {fb.site_residual:.3e}   allowed {fb.site_bound:.3e}")

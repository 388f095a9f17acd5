"""Picking the plus state with a field that vanishes as N grows.

Below the critical temperature a tiny positive field, of size
h = (max coupling)^delta, is already enough to tip the Curie-Weiss magnet
into the plus phase, while above it the magnetization follows h to zero.
"""

from ferromf import scalar_curie_weiss
from ferromf.models import CurieWeissFamily, low_temp_condition, positive_state_experiment, curie_weiss

sizes = [100, 1000, 10_000, 100_000]
for beta in (1.5, 0.5):
    lt = low_temp_condition(curie_weiss(100, beta, 0.0), alpha=1.2)
    print(f"beta={beta}: spectral radius in [{lt.lower:.4f}, {lt.upper:.4f}], low temperature: {lt.holds}")
    for row in positive_state_experiment(CurieWeissFamily(beta), sizes, delta=0.25):
        print(f"  N={row['n']:<7} h={row['h']:.4f}  m={row['max_m']:.4f}")
print(f"\nspontaneous magnetization at beta=1.5: {scalar_curie_weiss(0.0, 1.5):.4f}")

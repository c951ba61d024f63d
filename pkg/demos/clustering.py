"""Density-peak partition vs k-means vs fuzzy c-means on uniform layouts.

Run: python3 demos/clustering.py [n_instances]
"""

import sys

from uavswarm.association import ceta_partition, cluster_benchmark, density_stats
from uavswarm.scenarios import uniform_instances

n = int(sys.argv[1]) if len(sys.argv) > 1 else 50
layouts = uniform_instances(n, 100, seed=0)

# One layout up close: the five UAVs with the largest rho*delta become centres.
x = layouts[0]
stats = density_stats(x)
part = ceta_partition(x, 5)
print(f"cutoff distance d_c = {stats.d_c:.2f} m, densities range {stats.rho.min()}..{stats.rho.max()}")
print("centres:", part.centers.tolist(), "sizes:", part.sizes.tolist())

# Averages over many layouts. k-means and FCM iterate; the density-peak split is one pass.
rows, _ = cluster_benchmark(layouts, 5, seed=0)
print(f"\n{'method':<8}{'SSE':>12}{'SC':>9}{'iterations':>12}")
for r in rows:
    print(f"{r.method:<8}{r.sse_mean:>12.0f}{r.sc_mean:>9.3f}{r.iterations_mean:>12.2f}")

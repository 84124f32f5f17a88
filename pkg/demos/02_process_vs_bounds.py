"""Random access process on a small cache next to its closed-form bounds."""
import numpy as np

from distcache import TINY, geometric, uniform
from distcache.miss_analysis import OccupancyContext, cor1_rate, cor2_rate, exact_inplace, upper_inplace
from distcache.stochastic_process import ProcessParams, run_process

B, C, n = TINY.block_size, TINY.num_blocks, 10**6
for k in (8, 16, 32, 64):
    rates = [run_process(ProcessParams(uniform(k), n, TINY, seed=s)).total_rate for s in range(5)]
    est = exact_inplace(OccupancyContext(TINY, uniform(k)), n, samples=4000).exact_estimate
    print(f"k={k:3d}  lower {cor2_rate(k, B, C):.4f}  sim {np.mean(rates):.4f}  "
          f"exact {est.mean:.4f}  upper {cor1_rate(k, B, C):.4f}")

# skewed classes: the general upper bound still holds
d = geometric(32)
sim = run_process(ProcessParams(d, n, TINY, seed=0)).total_rate
print("geometric k=32: sim", round(sim, 4), "upper", round(upper_inplace(OccupancyContext(TINY, d), n).upper_rate, 4))

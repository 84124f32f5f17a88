"""Order-preserving float words and the tuned MSB radix sort."""
import numpy as np

from distcache import TINY
from distcache.msb_radix_float import (FLOAT32, auto_plan, float_to_ordered_word, naive_plan,
                                       simulate_sort_misses, sort_floats, uniform_floats)

x = np.array([0.0, 0.125, 0.5, 0.75], np.float32)
print([hex(int(w)) for w in float_to_ordered_word(x)])

n = 10**6
keys = uniform_floats(n, FLOAT32, rng=1)
plan = auto_plan(n, FLOAT32, TINY)
print(f"plan: theta={plan.theta:.5f} e'={plan.e_prime} g={plan.g} K={plan.K}")
assert np.array_equal(sort_floats(keys, FLOAT32, plan, TINY), np.sort(keys))

for name, p in (("tuned", plan), ("naive", naive_plan(n, FLOAT32))):
    _, stats = simulate_sort_misses(keys, FLOAT32, p, TINY)
    print(name, {ph: s.misses for ph, s in stats.items()}, "total", sum(s.misses for s in stats.values()))

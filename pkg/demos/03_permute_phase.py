"""Count and permute phases of a distribution sort, in place and out of place."""
import numpy as np

from distcache import TINY, Simulator, Tag
from distcache.dist_sort_core import Classifier, Layout, count_phase, permute_in_place, permute_out_of_place, traced_permute

rng = np.random.default_rng(0)
keys = rng.random(20)
cls = Classifier.range(0.0, 1.0, 4)
c = count_phase(keys, cls)
print("class offsets:", c.count)

print("out of place:", np.round(permute_out_of_place(keys, c, cls), 2))
ip = keys.copy()
permute_in_place(ip, c, c.start, cls)
print("in place:    ", np.round(ip, 2))

# replay a real permute on the simulator
data = rng.integers(0, 32, 200_000)
lay = Layout.contiguous(data.size, 32, TINY.block_size)
_, trace = traced_permute("inplace", data, Classifier.identity(32), lay)
stats = Simulator(TINY, lay.dest + data.size).run_trace(trace)
for tag in (Tag.COUNT, Tag.DATA):
    print(tag.name, "misses per key:", round(stats[tag].misses / data.size, 4))

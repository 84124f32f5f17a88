"""Direct-mapped cache basics: hits, compulsory and conflict misses."""
import numpy as np

from distcache import CacheGeometry, MemRef, Simulator, Tag, Trace

# 4 words per block, 4 cache blocks: addresses 0 and 16 share set 0
geom = CacheGeometry(4, 4)
sim = Simulator(geom, address_space=64)
for addr in (0, 1, 16, 0, 20):
    print(addr, sim.access(MemRef(addr)).name)

# a sequential scan misses once per block
stats = Simulator(CacheGeometry(8, 128), 4096).run_trace(Trace(np.arange(1000)))
print("scan of 1000 words:", stats.misses, "misses")

# per-tag accounting
refs = [MemRef(0, Tag.COUNT), MemRef(100, Tag.DATA), MemRef(1, Tag.DATA)]
stats = Simulator(geom, 128).run_trace(refs)
print(stats.as_dict())

"""Cache-miss analysis and simulation of distribution sorting."""
from .cache_sim import (
    PAPER_L2, PRESETS, TINY, AddressError, CacheGeometry, MemRef, MissStats,
    Outcome, Simulator, Tag, Trace, TraceError,
)
from .distributions import ClassDistribution, ExponentDistribution, geometric, uniform

__version__ = "0.1.0"

"""MSB radix sort for non-negative floats in [0, 1), tuned by the miss model.

Pipeline: keys below ``theta`` are split off and quicksorted; the rest go
through one radix pass over (low exponent bits, top ``m'`` mantissa bits),
then recursive passes over the remaining mantissa bits, with insertion sort
once a bucket holds at most ``insertion_threshold`` keys.

All passes work on the order-preserving unsigned view of the floats.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .cache_sim import PAPER_L2, CacheGeometry, MissStats, Simulator, Tag, N_TAGS
from .dist_sort_core import Classifier, Layout, traced_permute
from .miss_analysis import TradeOff, choose_k, msb_radix_bound

__all__ = [
    "FloatFormat",
    "FLOAT32",
    "FLOAT64",
    "RadixPlan",
    "float_to_ordered_word",
    "ordered_word_to_float",
    "uniform_floats",
    "expected_largest_class",
    "partition_theta",
    "auto_plan",
    "naive_plan",
    "sort_floats",
    "simulate_sort_misses",
    "trace_first_pass",
    "PHASES",
]


@dataclass(frozen=True)
class FloatFormat:
    e: int
    m: int

    def __post_init__(self):
        if (self.e, self.m) not in ((8, 23), (11, 52)):
            raise ValueError("supported formats are (e=8, m=23) and (e=11, m=52)")

    @property
    def bias(self) -> int:
        return (1 << (self.e - 1)) - 1

    @property
    def bits(self) -> int:
        return 1 + self.e + self.m

    @property
    def dtype(self):
        return np.float32 if self.e == 8 else np.float64

    @property
    def uint(self):
        return np.uint32 if self.e == 8 else np.uint64

    @classmethod
    def of(cls, dtype) -> "FloatFormat":
        dtype = np.dtype(dtype)
        if dtype == np.float32:
            return FLOAT32
        if dtype == np.float64:
            return FLOAT64
        raise TypeError(f"no float format for dtype {dtype}")


FLOAT32 = FloatFormat(8, 23)
FLOAT64 = FloatFormat(11, 52)


def float_to_ordered_word(x, fmt: FloatFormat | None = None) -> np.ndarray:
    """Unsigned words that sort like the (non-negative) floats they encode.

    Accepts a scalar or array; always returns a ``uint64`` array.
    """
    if fmt is None:
        fmt = FloatFormat.of(np.asarray(x).dtype) if np.asarray(x).dtype.kind == "f" else FLOAT64
    a = np.atleast_1d(np.asarray(x, dtype=fmt.dtype))
    if a.size:
        if not np.all(np.isfinite(a)):
            raise ValueError("NaN and infinite keys are not supported")
        if np.any(a < 0):
            raise ValueError("negative keys are not supported")
    w = a.view(fmt.uint).astype(np.uint64)
    # -0.0 carries the sign bit; it equals 0.0 so map it there
    w[a == 0] = 0
    return w


def ordered_word_to_float(w, fmt: FloatFormat) -> np.ndarray:
    return np.asarray(w, dtype=np.uint64).astype(fmt.uint).view(fmt.dtype)


def uniform_floats(n: int, fmt: FloatFormat = FLOAT32, rng=None) -> np.ndarray:
    """Uniform reals in [0, 1) rounded down to ``fmt``.

    Draws the exponent (``-i`` with probability ``2^-i``) and a full random
    mantissa directly, so small keys keep all their mantissa bits.
    """
    rng = np.random.default_rng(rng)
    i = rng.geometric(0.5, size=n).astype(np.int64)
    j = fmt.bias - i
    mant = rng.integers(0, 1 << fmt.m, size=n, dtype=np.uint64)
    w = (np.maximum(j, 0).astype(np.uint64) << np.uint64(fmt.m)) | mant
    w[j <= 0] = 0
    return ordered_word_to_float(w, fmt)


def expected_largest_class(r: int, e: int, n: float) -> float:
    """Expected size of the largest class after one pass with radix ``r`` bits.

    The ``r < e + 1`` branch is the closed form as published.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if r < e + 1:
        return n * (1.0 - 1.0 / 2.0 ** (2.0 ** (e - r + 1)))
    return n / 2.0 ** (r - e)


def partition_theta(data, theta: float):
    """Split keys into ``(keys < theta, keys >= theta)``."""
    data = np.asarray(data)
    mask = data < theta
    return data[mask], data[~mask]


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class RadixPlan:
    fmt: FloatFormat
    theta: float
    e_prime: int
    m_prime: int
    insertion_threshold: int = 8
    max_radix_bits: int = 8
    single_pass: bool = False
    first_radix_bits: int | None = None  # set for plain top-bit first passes
    predicted_first_pass_misses: float | None = None
    notes: tuple = field(default=())

    @property
    def g(self) -> int:
        return 1 << self.e_prime

    @property
    def K(self) -> int:
        return 1 << self.m_prime

    @property
    def j_lo(self) -> int:
        """Smallest biased exponent the first pass sees."""
        return max(0, self.fmt.bias - self.g)

    def first_pass(self) -> tuple[int, int, int]:
        """``(shift, offset, k)``: bucket = (word >> shift) - offset, in [0, k)."""
        if self.first_radix_bits is not None:
            r = self.first_radix_bits
            return self.fmt.bits - r, 0, 1 << r
        shift = self.fmt.m - self.m_prime
        offset = self.j_lo * self.K
        k = (self.fmt.bias - self.j_lo) * self.K
        return shift, offset, k

    def first_pass_remaining_bits(self) -> int:
        shift, _, _ = self.first_pass()
        return shift


def _theta_params(n: int, fmt: FloatFormat, theta: float | None):
    log_n = math.log2(max(n, 16))
    if theta is None:
        theta = 1.0 / log_n ** 2
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    e_prime = min(math.ceil(math.log2(math.log2(1.0 / theta))), fmt.e) if theta < 0.5 else 0
    return theta, max(e_prime, 0)


def auto_plan(n: int, fmt: FloatFormat = FLOAT32, geom: CacheGeometry = PAPER_L2,
              theta: float | None = None, criterion=None) -> RadixPlan:
    """Plan with ``theta = 1/log2(n)^2`` and ``m'`` picked from the miss bound."""
    notes = []
    if n < 16:
        notes.append("n < 16: parameters computed for n = 16")
    theta, e_prime = _theta_params(n, fmt, theta)
    g = 1 << e_prime
    n_eff = max(n, 16)
    # the first pass can take at most log n - log log n mantissa bits
    m_cap = max(0, min(fmt.m, math.floor(math.log2(n_eff) - math.log2(math.log2(n_eff)))))
    n_big = max(1, round(n_eff * (1 - theta)))
    if g > geom.words:
        warnings.warn("exponent groups exceed the cache; using K = 1", RuntimeWarning, stacklevel=2)
        choice_K, pred = 1, None
    else:
        ch = choose_k(geom, n_big, criterion or TradeOff(), "float", g=g, max_K_bits=m_cap)
        choice_K = ch.K
        pred = msb_radix_bound(geom, g, choice_K, n_big)
    m_prime = choice_K.bit_length() - 1
    with warnings.catch_warnings():
        # tiny inputs have no admissible later radix; the fallback is fine there
        warnings.simplefilter("ignore", RuntimeWarning)
        sub = choose_k(geom, max(n_big // (2 * choice_K), 1), criterion or TradeOff(), "uniform")
    max_bits = max(1, min(sub.k.bit_length() - 1, geom.words.bit_length() - 1))
    return RadixPlan(fmt, theta, e_prime, m_prime, 8, max_bits, False, None, pred, tuple(notes))


def naive_plan(n: int, fmt: FloatFormat = FLOAT32) -> RadixPlan:
    """One pass on the top ``ceil(log2 n - 3)`` bits, then insertion sort."""
    r = max(1, math.ceil(math.log2(max(n, 2)) - 3))
    r = min(r, fmt.bits)
    return RadixPlan(fmt, 0.0, 0, 0, 8, r, True, r, None)


# ---------------------------------------------------------------------------
# sort engine

PHASES = ("partition", "quicksort", "count", "permute", "count_rest", "permute_rest", "insertion")
P_PART, P_QS, P_COUNT1, P_PERM1, P_COUNT, P_PERM, P_INS = range(7)


@njit(cache=True)
def _touch(tr, cache, seen, stats, log_b, set_mask, phase, addr, tag):
    # same rule as cache_sim.sim_run, writing into a per-phase table
    if tr:
        blk = addr >> log_b
        s = blk & set_mask
        stats[phase, tag, 0] += 1
        if cache[s] != blk:
            cache[s] = blk
            stats[phase, tag, 1] += 1
            if seen[blk] == 0:
                seen[blk] = 1
                stats[phase, tag, 2] += 1
            else:
                stats[phase, tag, 3] += 1


@njit(cache=True)
def _insertion(a, lo, hi, tr, cache, seen, stats, log_b, set_mask, d0, phase):
    """Insertion sort of ``a[lo:hi]``.

    One access per element examined: ``a[i]`` when it is picked up, then
    ``a[j-1]`` for every comparison. Each write lands on a word that was
    just read, so it is not counted again.
    """
    # Quadratic on large buckets, so the cache update is written out here;
    # going through _touch costs a function call per access.
    for i in range(lo + 1, hi):
        v = a[i]
        if tr:
            blk = (d0 + i) >> log_b
            s = blk & set_mask
            stats[phase, 1, 0] += 1
            if cache[s] != blk:
                cache[s] = blk
                stats[phase, 1, 1] += 1
                if seen[blk] == 0:
                    seen[blk] = 1
                    stats[phase, 1, 2] += 1
                else:
                    stats[phase, 1, 3] += 1
        j = i
        while j > lo:
            if tr:
                blk = (d0 + j - 1) >> log_b
                s = blk & set_mask
                stats[phase, 1, 0] += 1
                if cache[s] != blk:
                    cache[s] = blk
                    stats[phase, 1, 1] += 1
                    if seen[blk] == 0:
                        seen[blk] = 1
                        stats[phase, 1, 2] += 1
                    else:
                        stats[phase, 1, 3] += 1
            if a[j - 1] <= v:
                break
            a[j] = a[j - 1]
            j -= 1
        if j != i:
            a[j] = v


@njit(cache=True)
def _quicksort(a, lo, hi, tr, cache, seen, stats, log_b, set_mask, d0):
    stack = np.empty((128, 2), dtype=np.int64)
    sp = 0
    stack[0, 0] = lo
    stack[0, 1] = hi
    sp = 1
    while sp > 0:
        sp -= 1
        l = stack[sp, 0]
        h = stack[sp, 1]
        while h - l > 16:
            mid = (l + h - 1) // 2
            # median of three into a[mid]
            _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + l, 1)
            _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + mid, 1)
            _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + h - 1, 1)
            if a[mid] < a[l]:
                a[mid], a[l] = a[l], a[mid]
            if a[h - 1] < a[l]:
                a[h - 1], a[l] = a[l], a[h - 1]
            if a[h - 1] < a[mid]:
                a[h - 1], a[mid] = a[mid], a[h - 1]
            pivot = a[mid]
            i = l
            j = h - 1
            while True:
                while a[i] < pivot:
                    _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + i, 1)
                    i += 1
                _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + i, 1)
                while a[j] > pivot:
                    _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + j, 1)
                    j -= 1
                _touch(tr, cache, seen, stats, log_b, set_mask, P_QS, d0 + j, 1)
                if i >= j:
                    break
                a[i], a[j] = a[j], a[i]
                i += 1
                j -= 1
            # [l, j] and [j+1, h); recurse on the smaller side first
            if j + 1 - l < h - j - 1:
                stack[sp, 0] = j + 1
                stack[sp, 1] = h
                sp += 1
                h = j + 1
            else:
                stack[sp, 0] = l
                stack[sp, 1] = j + 1
                sp += 1
                l = j + 1
        _insertion(a, l, h, tr, cache, seen, stats, log_b, set_mask, d0, P_QS)


@njit(cache=True)
def _radix_pass(a, lo, hi, shift, mask, offset, k, count, start,
                tr, cache, seen, stats, log_b, set_mask, d0, c0, s0, pc, pp):
    """Count phase then cycle-leader permute of ``a[lo:hi]`` on one bit slice.

    Leaves the bucket start offsets (relative to ``lo``) in ``start[:k]``.
    """
    n = hi - lo
    for x in range(k):
        count[x] = 0
    for i in range(lo, hi):
        x = np.int64((a[i] >> shift) & mask) - offset
        _touch(tr, cache, seen, stats, log_b, set_mask, pc, d0 + i, 1)
        _touch(tr, cache, seen, stats, log_b, set_mask, pc, c0 + x, 0)
        count[x] += 1
    s = 0
    for x in range(k):
        c = count[x]
        count[x] = s
        start[x] = s
        _touch(tr, cache, seen, stats, log_b, set_mask, pc, c0 + x, 0)
        _touch(tr, cache, seen, stats, log_b, set_mask, pc, s0 + x, 5)
        s += c
    if n == 0:
        return
    leader = n - 1
    while True:
        key = a[lo + leader]
        _touch(tr, cache, seen, stats, log_b, set_mask, pp, d0 + lo + leader, 5)
        while True:
            x = np.int64((key >> shift) & mask) - offset
            idx = count[x]
            count[x] += 1
            tmp = a[lo + idx]
            a[lo + idx] = key
            key = tmp
            _touch(tr, cache, seen, stats, log_b, set_mask, pp, c0 + x, 0)
            _touch(tr, cache, seen, stats, log_b, set_mask, pp, d0 + lo + idx, 1)
            if idx == leader:
                break
        while x > 0:
            _touch(tr, cache, seen, stats, log_b, set_mask, pp, c0 + x - 1, 5)
            _touch(tr, cache, seen, stats, log_b, set_mask, pp, s0 + x, 5)
            if count[x - 1] >= start[x]:
                x -= 1
            else:
                break
        if x == 0:
            break
        leader = start[x] - 1


@njit(cache=True)
def _sort_engine(a, theta_w, use_theta, first_shift, first_offset, first_k,
                 rest_bits_first, max_bits, ins_thr, single_pass,
                 tr, cache, seen, stats, log_b, set_mask, d0, c0, s0, kcap):
    n = a.shape[0]
    count = np.empty(kcap, dtype=np.int64)
    start = np.empty(kcap, dtype=np.int64)
    # split off keys below theta to the front
    n_small = 0
    if use_theta:
        i = 0
        j = n - 1
        while True:
            while i <= j and a[i] < theta_w:
                _touch(tr, cache, seen, stats, log_b, set_mask, P_PART, d0 + i, 1)
                i += 1
            while i <= j and a[j] >= theta_w:
                _touch(tr, cache, seen, stats, log_b, set_mask, P_PART, d0 + j, 1)
                j -= 1
            if i >= j:
                break
            a[i], a[j] = a[j], a[i]
            _touch(tr, cache, seen, stats, log_b, set_mask, P_PART, d0 + i, 1)
            _touch(tr, cache, seen, stats, log_b, set_mask, P_PART, d0 + j, 1)
            i += 1
            j -= 1
        n_small = i
        _quicksort(a, 0, n_small, tr, cache, seen, stats, log_b, set_mask, d0)
    lo0 = n_small
    if n - lo0 <= 1:
        return n_small
    fmask = (np.uint64(1) << np.uint64(63)) - np.uint64(1)  # all shifted bits
    _radix_pass(a, lo0, n, np.uint64(first_shift), fmask, first_offset, first_k, count, start,
                tr, cache, seen, stats, log_b, set_mask, d0, c0, s0, P_COUNT1, P_PERM1)
    # buckets still to finish: (lo, hi, remaining bits)
    # pending ranges are disjoint and hold at least two keys each
    stack = np.empty((n // 2 + 64, 3), dtype=np.int64)
    sp = 0
    for x in range(first_k - 1, -1, -1):
        b_lo = lo0 + start[x]
        b_hi = lo0 + (start[x + 1] if x + 1 < first_k else n - lo0)
        if b_hi - b_lo > 1:
            stack[sp, 0] = b_lo
            stack[sp, 1] = b_hi
            stack[sp, 2] = rest_bits_first
            sp += 1
    while sp > 0:
        sp -= 1
        lo = stack[sp, 0]
        hi = stack[sp, 1]
        bits = stack[sp, 2]
        size = hi - lo
        if size <= ins_thr or single_pass or bits <= 0:
            if bits > 0 or single_pass:
                _insertion(a, lo, hi, tr, cache, seen, stats, log_b, set_mask, d0, P_INS)
            continue
        r = int(math.ceil(math.log2(size) - 3.0))
        if r < 1:
            r = 1
        if r > max_bits:
            r = max_bits
        if r > bits:
            r = bits
        k = 1 << r
        sh = bits - r
        _radix_pass(a, lo, hi, np.uint64(sh), np.uint64(k - 1), 0, k, count, start,
                    tr, cache, seen, stats, log_b, set_mask, d0, c0, s0, P_COUNT, P_PERM)
        for x in range(k - 1, -1, -1):
            b_lo = lo + start[x]
            b_hi = lo + (start[x + 1] if x + 1 < k else size)
            if b_hi - b_lo > 1:
                stack[sp, 0] = b_lo
                stack[sp, 1] = b_hi
                stack[sp, 2] = sh
                sp += 1
    return n_small


def _theta_word(theta: float, fmt: FloatFormat) -> int:
    """Word of the smallest ``fmt`` float that is >= theta."""
    t = fmt.dtype(theta)
    if float(t) < theta:
        t = np.nextafter(t, fmt.dtype(np.inf))
    return int(float_to_ordered_word(np.array([t], dtype=fmt.dtype), fmt)[0])


def _prepare(data, fmt):
    data = np.asarray(data)
    if fmt is None:
        fmt = FloatFormat.of(data.dtype) if data.dtype.kind == "f" else FLOAT64
    w = float_to_ordered_word(data, fmt)
    if w.size and w.max() >= float_to_ordered_word(np.array([1.0], dtype=fmt.dtype), fmt)[0]:
        raise ValueError("keys must lie in [0, 1)")
    return w, fmt


def _run(words, fmt, plan: RadixPlan, geom: CacheGeometry, tracing: bool):
    n = words.size
    shift, offset, k1 = plan.first_pass()
    kcap = max(k1, 1 << plan.max_radix_bits, 2)
    B = geom.block_size
    up = lambda x: -(-x // B) * B
    c0, s0 = 0, up(kcap)
    d0 = up(s0 + kcap)
    space = d0 + max(n, 1)
    if tracing:
        sim = Simulator(geom, space)
        cache, seen, _, log_b, set_mask = sim.state()
    else:
        cache = np.zeros(1, dtype=np.int64)
        seen = np.zeros(1, dtype=np.uint8)
        log_b, set_mask = 0, 0
    stats = np.zeros((len(PHASES), N_TAGS, 4), dtype=np.int64)
    use_theta = plan.theta > 0
    tw = _theta_word(plan.theta, fmt) if use_theta else 0
    n_small = _sort_engine(
        words, np.uint64(tw), use_theta, shift, offset, k1, shift, plan.max_radix_bits,
        plan.insertion_threshold, plan.single_pass, tracing, cache, seen, stats,
        log_b, set_mask, d0, c0, s0, kcap,
    )
    return n_small, {p: MissStats(stats[i]) for i, p in enumerate(PHASES)}


def sort_floats(data, fmt: FloatFormat | None = None, plan: RadixPlan | None = None,
                geom: CacheGeometry = PAPER_L2) -> np.ndarray:
    """Return a sorted copy of ``data`` (non-negative floats below 1)."""
    words, fmt = _prepare(data, fmt)
    if plan is None:
        plan = auto_plan(max(words.size, 16), fmt, geom)
    _run(words, fmt, plan, geom, False)
    return ordered_word_to_float(words, fmt)


def simulate_sort_misses(data, fmt: FloatFormat | None = None, plan: RadixPlan | None = None,
                         geom: CacheGeometry = PAPER_L2):
    """Sort while replaying every key access on a simulated cache.

    Returns ``(sorted, per_phase_stats)``; phases are listed in ``PHASES``.
    """
    words, fmt = _prepare(data, fmt)
    if plan is None:
        plan = auto_plan(max(words.size, 16), fmt, geom)
    _, stats = _run(words, fmt, plan, geom, True)
    return ordered_word_to_float(words, fmt), stats


@dataclass
class FirstPassReport:
    plan: RadixPlan
    keys: int  # keys that went through the first pass
    model_misses: int  # COUNT + DATA misses of the permute
    stats: MissStats
    bound: float | None


def trace_first_pass(data, fmt: FloatFormat | None = None, plan: RadixPlan | None = None,
                     geom: CacheGeometry = PAPER_L2) -> FirstPassReport:
    """Replay the first radix permute on a fresh cache.

    The keys at or above ``theta`` are permuted in place with the plan's
    first-pass classifier; the count array sits block aligned in front of
    the data.
    """
    words, fmt = _prepare(data, fmt)
    if plan is None:
        plan = auto_plan(max(words.size, 16), fmt, geom)
    if plan.theta > 0:
        tw = _theta_word(plan.theta, fmt)
        big = words[words >= np.uint64(tw)]
    else:
        big = words
    shift, offset, k1 = plan.first_pass()
    cls = Classifier.top_bits(shift, (1 << 62) - 1, offset, k=k1)
    layout = Layout.contiguous(big.size, k1, geom.block_size)
    _, trace = traced_permute("inplace", big, cls, layout)
    sim = Simulator(geom, layout.dest + max(big.size, 1))
    stats = sim.run_trace(trace)
    model = stats[Tag.COUNT].misses + stats[Tag.DATA].misses
    bound = None
    if plan.first_radix_bits is None:
        g = 1 << plan.e_prime
        if g * plan.K <= geom.words and plan.K <= geom.num_blocks:
            bound = msb_radix_bound(geom, g, plan.K, big.size)
    return FirstPassReport(plan, int(big.size), int(model), stats, bound)

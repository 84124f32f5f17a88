"""Count phase and the two permute phases of one distribution-sort pass.

Classes are 0-based. ``count_phase`` turns class sizes into starting
offsets; the permutes then move every key to its class's slot range.
``traced_permute`` runs a permute while recording the memory references
the access processes model, so the run can be replayed on the simulator.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .cache_sim import Tag, Trace

__all__ = [
    "Classifier",
    "ClassifierDomainError",
    "CountArrays",
    "Layout",
    "count_phase",
    "permute_out_of_place",
    "permute_in_place",
    "traced_permute",
]


class ClassifierDomainError(ValueError):
    pass


class Classifier:
    """Maps keys to classes ``0..k-1``.

    Build one with :meth:`range`, :meth:`top_bits` or :meth:`custom`.
    """

    def __init__(self, kind: str, k: int, fn: Callable[[np.ndarray], np.ndarray], **params):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.kind = kind
        self.k = int(k)
        self._fn = fn
        self.params = params

    def __repr__(self) -> str:
        args = ", ".join(f"{a}={v!r}" for a, v in self.params.items())
        return f"Classifier.{self.kind}(k={self.k}{', ' + args if args else ''})"

    @classmethod
    def range(cls, a: float, b: float, k: int) -> "Classifier":
        """Equal-width buckets over ``[a, b)``."""
        if not a < b:
            raise ValueError("need a < b")

        def fn(keys):
            keys = np.asarray(keys, dtype=np.float64)
            if keys.size and (keys.min() < a or keys.max() >= b):
                raise ClassifierDomainError(f"key outside [{a}, {b})")
            c = np.floor((keys - a) / (b - a) * k).astype(np.int64)
            # rounding can push a key just below b into class k
            return np.minimum(c, k - 1)

        return cls("range", k, fn, a=a, b=b)

    @classmethod
    def top_bits(cls, shift: int, mask: int, offset: int = 0, k: int | None = None) -> "Classifier":
        """``((word >> shift) & mask) - offset`` on unsigned words."""
        if k is None:
            k = mask + 1 - offset

        def fn(words):
            w = np.asarray(words, dtype=np.uint64)
            c = ((w >> np.uint64(shift)) & np.uint64(mask)).astype(np.int64) - offset
            if c.size and (c.min() < 0 or c.max() >= k):
                raise ClassifierDomainError("key outside the classified bit range")
            return c

        return cls("top_bits", k, fn, shift=shift, mask=mask, offset=offset)

    @classmethod
    def custom(cls, fn: Callable, k: int) -> "Classifier":
        def checked(keys):
            c = np.asarray(fn(keys), dtype=np.int64)
            if c.size and (c.min() < 0 or c.max() >= k):
                raise ClassifierDomainError("classifier returned a class outside [0, k)")
            return c

        return cls("custom", k, checked)

    @classmethod
    def identity(cls, k: int) -> "Classifier":
        return cls.custom(lambda x: np.asarray(x, dtype=np.int64), k)

    def classify(self, keys) -> np.ndarray:
        return self._fn(keys)

    __call__ = classify


@dataclass
class CountArrays:
    count: np.ndarray
    start: np.ndarray

    @property
    def k(self) -> int:
        return self.count.size


def count_phase(data, cls: Classifier) -> CountArrays:
    """Starting offset of every class; ``start`` is a frozen copy of ``count``."""
    c = cls.classify(data)
    sizes = np.bincount(c, minlength=cls.k) if c.size else np.zeros(cls.k, dtype=np.int64)
    count = np.zeros(cls.k, dtype=np.int64)
    np.cumsum(sizes[:-1], out=count[1:])
    return CountArrays(count, count.copy())


# -- kernels -----------------------------------------------------------------


@njit(cache=True)
def _oop_kernel(data, classes, count):
    count = count.copy()
    out = np.empty_like(data)
    for i in range(data.shape[0]):
        x = classes[i]
        out[count[x]] = data[i]
        count[x] += 1
    return out


@njit(cache=True)
def _inplace_kernel(data, classes, count, start, trace_addr, trace_tag, bases):
    """Cycle-leader permute of ``data`` (and its class labels) in place.

    When ``trace_addr`` is non-empty, the references are recorded there.
    ``bases`` holds the DATA, COUNT and START base addresses. Returns
    ``(swaps, trace_length)``.
    """
    n = data.shape[0]
    k = count.shape[0]
    count = count.copy()
    tracing = trace_addr.shape[0] > 0
    d0, c0, s0 = bases[0], bases[1], bases[2]
    t = 0
    swaps = 0
    if n == 0:
        return 0, 0
    leader = n - 1
    x = k - 1
    while True:
        # take the leader's key into hand
        key = data[leader]
        kc = classes[leader]
        if tracing:
            trace_addr[t] = d0 + leader
            trace_tag[t] = 5
            t += 1
        while True:
            x = kc
            idx = count[x]
            count[x] += 1
            tmp = data[idx]
            tc = classes[idx]
            data[idx] = key
            classes[idx] = kc
            key = tmp
            kc = tc
            swaps += 1
            if tracing:
                trace_addr[t] = c0 + x
                trace_tag[t] = 0
                trace_addr[t + 1] = d0 + idx
                trace_tag[t + 1] = 1
                t += 2
            if idx == leader:
                break
        # find the highest class that is not yet complete
        while x > 0:
            if tracing:
                trace_addr[t] = c0 + x - 1
                trace_tag[t] = 5
                trace_addr[t + 1] = s0 + x
                trace_tag[t + 1] = 5
                t += 2
            if count[x - 1] >= start[x]:
                x -= 1
            else:
                break
        if x == 0:
            break
        leader = start[x] - 1
    return swaps, t


@njit(cache=True)
def _oop_traced_kernel(data, classes, count, trace_addr, trace_tag, bases):
    count = count.copy()
    out = np.empty_like(data)
    src, c0, dst = bases[0], bases[1], bases[2]
    t = 0
    for i in range(data.shape[0]):
        x = classes[i]
        trace_addr[t] = src + i
        trace_tag[t] = 3
        trace_addr[t + 1] = c0 + x
        trace_tag[t + 1] = 0
        trace_addr[t + 2] = dst + count[x]
        trace_tag[t + 2] = 2
        t += 3
        out[count[x]] = data[i]
        count[x] += 1
    return out


_EMPTY_ADDR = np.zeros(0, dtype=np.int64)
_EMPTY_TAG = np.zeros(0, dtype=np.int8)


def permute_out_of_place(data, counts: CountArrays, cls: Classifier) -> np.ndarray:
    """Stable scatter of ``data`` into a new array grouped by class."""
    data = np.asarray(data)
    classes = cls.classify(data)
    return _oop_kernel(data, classes, counts.count)


def permute_in_place(data: np.ndarray, counts: CountArrays, starts, cls: Classifier) -> int:
    """Group ``data`` by class in place with the cycle-leader method.

    Returns the number of swap steps, which always equals ``len(data)``.
    Not stable.
    """
    if not isinstance(data, np.ndarray):
        raise TypeError("permute_in_place needs a numpy array")
    starts = counts.start if starts is None else np.asarray(starts, dtype=np.int64)
    classes = cls.classify(data)
    swaps, _ = _inplace_kernel(
        data, classes, counts.count, starts, _EMPTY_ADDR, _EMPTY_TAG, np.zeros(3, np.int64)
    )
    return int(swaps)


@dataclass(frozen=True)
class Layout:
    """Base word addresses of the arrays a traced permute touches."""

    data: int
    count: int
    start: int
    dest: int = -1

    @classmethod
    def contiguous(cls, n: int, k: int, block_size: int = 1) -> "Layout":
        """Count, start, data and destination back to back, each block aligned."""

        def up(x):
            return -(-x // block_size) * block_size

        count = 0
        start = up(k)
        data = up(start + k)
        dest = up(data + n)
        return cls(data=data, count=count, start=start, dest=dest)

    @property
    def end(self) -> int:
        return max(self.data, self.count, self.start, self.dest) + 1


def traced_permute(variant: str, data, cls: Classifier, layout: Layout | None = None):
    """Run the count phase untraced, then a traced permute.

    In-place references: COUNT and DATA for each swap step, OTHER for the
    leader pickup and the completeness scan. Out-of-place references: one
    SRC read, one COUNT and one DEST access per key. A read and the write
    back to the same word count as one access.

    Returns ``(result, trace)``; for in-place, ``result`` is a permuted copy.
    """
    data = np.array(data, copy=True)
    n = data.size
    counts = count_phase(data, cls)
    classes = cls.classify(data)
    k = cls.k
    if layout is None:
        layout = Layout.contiguous(n, k)
    if variant == "inplace":
        # per cycle: pickup, two per step, two per failed completeness check
        size = 5 * n + 2 * k + 8
        addr = np.empty(size, dtype=np.int64)
        tag = np.empty(size, dtype=np.int8)
        bases = np.array([layout.data, layout.count, layout.start], dtype=np.int64)
        if n == 0:
            return data, Trace(addr[:0], tag[:0])
        _, t = _inplace_kernel(data, classes, counts.count, counts.start, addr, tag, bases)
        return data, Trace(addr[:t], tag[:t])
    if variant == "outofplace":
        if layout.dest < 0:
            raise ValueError("out-of-place layout needs a dest base")
        addr = np.empty(3 * n, dtype=np.int64)
        tag = np.empty(3 * n, dtype=np.int8)
        bases = np.array([layout.data, layout.count, layout.dest], dtype=np.int64)
        out = _oop_traced_kernel(data, classes, counts.count, addr, tag, bases)
        return out, Trace(addr, tag)
    raise ValueError(f"unknown variant {variant!r}")


# Re-exported for callers that want the model-only part of a trace.
MODEL_TAGS = (Tag.COUNT, Tag.DATA, Tag.DEST, Tag.SRC)

"""Trace-driven simulation of a direct-mapped cache.

Memory is word addressed. A word ``x`` lives in memory block ``x // B``
and may only be cached in cache block ``(x // B) % C``. Misses are split
into compulsory misses (first touch of a memory block) and conflict
misses (everything else; capacity misses are folded in here because a
direct-mapped cache cannot tell them apart without a reference model).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from numba import njit

__all__ = [
    "CacheGeometry",
    "Tag",
    "MemRef",
    "Outcome",
    "TagStats",
    "MissStats",
    "Trace",
    "Simulator",
    "AddressError",
    "TraceError",
    "PAPER_L2",
    "TINY",
    "PRESETS",
]


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Block size ``B`` (words per block) and block count ``C``."""

    block_size: int
    num_blocks: int

    def __post_init__(self):
        for name in ("block_size", "num_blocks"):
            v = getattr(self, name)
            if int(v) != v or not _is_pow2(int(v)):
                raise ValueError(f"{name} must be a positive power of two, got {v!r}")

    @property
    def B(self) -> int:
        return self.block_size

    @property
    def C(self) -> int:
        return self.num_blocks

    @property
    def words(self) -> int:
        """Cache capacity ``B*C`` in words."""
        return self.block_size * self.num_blocks

    @property
    def log_b(self) -> int:
        return self.block_size.bit_length() - 1

    def cache_block(self, address: int) -> int:
        return (address // self.block_size) % self.num_blocks


# 512KB direct-mapped L2 with 8-word blocks, and a desk-scale cache for CI.
PAPER_L2 = CacheGeometry(8, 8192)
TINY = CacheGeometry(8, 128)
PRESETS = {"paper-L2": PAPER_L2, "tiny": TINY}


class Tag(IntEnum):
    """Label of the array an access belongs to."""

    COUNT = 0
    DATA = 1
    DEST = 2
    SRC = 3
    SEQ = 4
    OTHER = 5


N_TAGS = len(Tag)


class MemRef(NamedTuple):
    address: int
    tag: Tag = Tag.OTHER


class Outcome(IntEnum):
    HIT = 0
    COMPULSORY = 1
    CONFLICT = 2

    @property
    def is_miss(self) -> bool:
        return self is not Outcome.HIT


class AddressError(IndexError):
    pass


class TraceError(AddressError):
    """Out-of-range address inside a trace; ``position`` is its index."""

    def __init__(self, message: str, position: int):
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class TagStats:
    accesses: int = 0
    misses: int = 0
    compulsory_misses: int = 0
    conflict_misses: int = 0


class MissStats:
    """Per-tag access and miss counters.

    Backed by an ``(n_tags, 4)`` integer array with columns
    accesses, misses, compulsory, conflict.
    """

    COLUMNS = ("accesses", "misses", "compulsory", "conflict")

    def __init__(self, table: np.ndarray | None = None):
        if table is None:
            table = np.zeros((N_TAGS, 4), dtype=np.int64)
        self.table = np.asarray(table, dtype=np.int64).copy()

    def __getitem__(self, tag) -> TagStats:
        row = self.table[int(tag)]
        return TagStats(*(int(v) for v in row))

    def __add__(self, other: "MissStats") -> "MissStats":
        return MissStats(self.table + other.table)

    def __sub__(self, other: "MissStats") -> "MissStats":
        return MissStats(self.table - other.table)

    def __eq__(self, other) -> bool:
        return isinstance(other, MissStats) and np.array_equal(self.table, other.table)

    def __repr__(self) -> str:
        parts = [f"{Tag(t).name}={self[t]}" for t in self.tags()]
        return f"MissStats({', '.join(parts)})"

    def tags(self) -> list[Tag]:
        """Tags that saw at least one access."""
        return [Tag(t) for t in range(N_TAGS) if self.table[t, 0] > 0]

    def total(self, tags: Iterable | None = None) -> TagStats:
        rows = self.table if tags is None else self.table[[int(t) for t in tags]]
        return TagStats(*(int(v) for v in rows.sum(axis=0)))

    @property
    def misses(self) -> int:
        return int(self.table[:, 1].sum())

    @property
    def accesses(self) -> int:
        return int(self.table[:, 0].sum())

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {
            Tag(t).name: dict(zip(self.COLUMNS, (int(v) for v in self.table[t])))
            for t in self.tags()
        }


class Trace:
    """A sequence of memory references stored as two parallel arrays."""

    def __init__(self, addresses, tags=None):
        self.addresses = np.ascontiguousarray(addresses, dtype=np.int64)
        if tags is None:
            tags = np.full(len(self.addresses), int(Tag.OTHER), dtype=np.int8)
        self.tags = np.ascontiguousarray(tags, dtype=np.int8)
        if self.addresses.shape != self.tags.shape:
            raise ValueError("addresses and tags must have the same length")

    @classmethod
    def from_refs(cls, refs: Iterable[MemRef]) -> "Trace":
        refs = [r if isinstance(r, MemRef) else MemRef(*r) for r in refs]
        return cls([r.address for r in refs], [int(r.tag) for r in refs])

    def __len__(self) -> int:
        return len(self.addresses)

    def __iter__(self) -> Iterator[MemRef]:
        for a, t in zip(self.addresses.tolist(), self.tags.tolist()):
            yield MemRef(a, Tag(t))

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Trace(self.addresses[idx], self.tags[idx])
        return MemRef(int(self.addresses[idx]), Tag(int(self.tags[idx])))

    def count(self, tag) -> int:
        return int(np.count_nonzero(self.tags == int(tag)))

    def select(self, tags: Iterable) -> "Trace":
        keep = np.isin(self.tags, [int(t) for t in tags])
        return Trace(self.addresses[keep], self.tags[keep])

    def dump(self, path) -> None:
        """Write one ``tag,address`` line per access."""
        names = np.array([t.name for t in Tag])
        with open(path, "w") as fh:
            for t, a in zip(names[self.tags], self.addresses.tolist()):
                fh.write(f"{t},{a}\n")

    @classmethod
    def load(cls, path) -> "Trace":
        addrs, tags = [], []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                name, addr = line.split(",")
                tags.append(int(Tag[name.strip()]))
                addrs.append(int(addr))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad trace record {line!r}") from exc
        return cls(addrs, tags)


@njit(cache=True)
def sim_run(cache, seen, stats, log_b, set_mask, addrs, tags):
    """Apply a whole trace to the cache state held in the arrays."""
    # kept as one flat loop; a jitted call per access with array arguments
    # is several times slower than the update itself
    for t in range(addrs.shape[0]):
        blk = addrs[t] >> log_b
        s = blk & set_mask
        tag = tags[t]
        stats[tag, 0] += 1
        if cache[s] != blk:
            cache[s] = blk
            stats[tag, 1] += 1
            if seen[blk] == 0:
                seen[blk] = 1
                stats[tag, 2] += 1
            else:
                stats[tag, 3] += 1


class Simulator:
    """Direct-mapped cache over an ``address_space``-word memory.

    The cache starts empty. All counters are kept per :class:`Tag`.

    Examples
    --------
    >>> sim = Simulator(CacheGeometry(4, 4), 64)
    >>> sim.access(MemRef(0, Tag.DATA))
    <Outcome.COMPULSORY: 1>
    >>> sim.access(MemRef(1, Tag.DATA))
    <Outcome.HIT: 0>
    """

    def __init__(self, geom: CacheGeometry, address_space: int):
        if address_space < 1:
            raise ValueError("address_space must be >= 1")
        self.geom = geom
        self.address_space = int(address_space)
        self.n_memory_blocks = -(-self.address_space // geom.block_size)
        self.cache = np.full(geom.num_blocks, -1, dtype=np.int64)
        self.seen = np.zeros(self.n_memory_blocks, dtype=np.uint8)
        self._stats = np.zeros((N_TAGS, 4), dtype=np.int64)
        self._log_b = geom.log_b
        self._set_mask = geom.num_blocks - 1

    @property
    def stats(self) -> MissStats:
        return MissStats(self._stats)

    def reset(self) -> None:
        self.cache[:] = -1
        self.seen[:] = 0
        self._stats[:] = 0

    def state(self):
        """Raw state tuple for jitted kernels that drive the cache directly."""
        return self.cache, self.seen, self._stats, self._log_b, self._set_mask

    def access(self, ref: MemRef) -> Outcome:
        addr = int(ref.address)
        if not 0 <= addr < self.address_space:
            raise AddressError(f"address {addr} outside [0, {self.address_space})")
        # plain Python path; the jitted one is used for whole traces
        blk = addr >> self._log_b
        s = blk & self._set_mask
        row = self._stats[int(ref.tag)]
        row[0] += 1
        if self.cache[s] == blk:
            return Outcome.HIT
        self.cache[s] = blk
        row[1] += 1
        if not self.seen[blk]:
            self.seen[blk] = 1
            row[2] += 1
            return Outcome.COMPULSORY
        row[3] += 1
        return Outcome.CONFLICT

    def run_trace(self, trace) -> MissStats:
        """Feed a whole trace through the cache and return the accumulated stats."""
        if not isinstance(trace, Trace):
            trace = Trace.from_refs(trace)
        if len(trace):
            bad = np.flatnonzero((trace.addresses < 0) | (trace.addresses >= self.address_space))
            if bad.size:
                pos = int(bad[0])
                raise TraceError(
                    f"trace position {pos}: address {int(trace.addresses[pos])} "
                    f"outside [0, {self.address_space})",
                    pos,
                )
            sim_run(*self.state(), trace.addresses, trace.tags)
        return self.stats


def simulate(geom: CacheGeometry, trace, address_space: int | None = None) -> MissStats:
    """Run ``trace`` on a fresh cache and return its stats."""
    if not isinstance(trace, Trace):
        trace = Trace.from_refs(trace)
    if address_space is None:
        address_space = int(trace.addresses.max()) + 1 if len(trace) else 1
    return Simulator(geom, address_space).run_trace(trace)

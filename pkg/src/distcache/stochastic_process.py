"""Monte-Carlo access processes of a distribution-sort permute loop.

Each round draws a class ``x`` and touches the memory a permute step would
touch. Three variants are supported:

``inplace``     count entry ``c_x`` then the pointer ``D_x`` (advanced by one)
``outofplace``  a sequential source read ``S[s]`` first, then as above
``sequences``   only the pointer ``D_x``; there is no count array

Pointer regions get independent uniform offsets modulo ``B*C`` so that their
cache alignment is random, they never overlap each other or the count and
source arrays, and the count array starts on a block boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from .cache_sim import CacheGeometry, MissStats, Simulator, Tag, Trace
from .distributions import ClassDistribution

__all__ = [
    "Variant",
    "ProcessParams",
    "AddressPlan",
    "ProcessRunReport",
    "LayoutError",
    "layout_addresses",
    "build_trace",
    "run_process",
    "run_inplace_process",
    "run_outofplace_process",
    "run_sequences_process",
    "CSV_FIELDS",
]


class Variant(str, Enum):
    INPLACE = "inplace"
    OUTOFPLACE = "outofplace"
    SEQUENCES = "sequences"


# Tag used for the pointer access of each variant.
POINTER_TAG = {
    Variant.INPLACE: Tag.DATA,
    Variant.OUTOFPLACE: Tag.DEST,
    Variant.SEQUENCES: Tag.SEQ,
}
ACCESSES_PER_ROUND = {Variant.INPLACE: 2, Variant.OUTOFPLACE: 3, Variant.SEQUENCES: 1}

# Words available to a single run; the simulator keeps one byte per memory block.
DEFAULT_MAX_ADDRESS_SPACE = 1 << 33


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class ProcessParams:
    dist: ClassDistribution
    rounds: int
    geom: CacheGeometry
    seed: int = 0
    variant: Variant = Variant.INPLACE
    max_address_space: int = DEFAULT_MAX_ADDRESS_SPACE

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        k = self.dist.k
        if self.variant is Variant.SEQUENCES:
            if k < 1:
                raise ValueError("sequences need k >= 1")
        else:
            if not 2 <= k <= self.geom.words:
                raise ValueError(f"k={k} outside [2, B*C={self.geom.words}]")
            if k % self.geom.block_size:
                raise ValueError(
                    f"B={self.geom.block_size} must divide k={k}; pad with dist.padded_to(B)"
                )

    @property
    def k(self) -> int:
        return self.dist.k


@dataclass(frozen=True)
class AddressPlan:
    count_base: int
    region_bases: np.ndarray  # start word of each pointer region
    region_capacity: int
    src_base: int  # -1 when the variant has no source array
    address_space: int

    def regions(self):
        """``(start, end)`` half-open word ranges of every pointer region."""
        return [(int(b), int(b) + self.region_capacity) for b in self.region_bases]


def _roundup(x: int, m: int) -> int:
    return -(-x // m) * m


def layout_addresses(params: ProcessParams, rng: np.random.Generator | None = None) -> AddressPlan:
    """Place the count array, the source array and the ``k`` pointer regions.

    The first ``k`` draws of ``rng`` are the pointer offsets modulo ``B*C``;
    the out-of-place source offset is the next draw.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    geom, k, n = params.geom, params.k, params.rounds
    bc = geom.words
    offsets = rng.integers(0, bc, size=k)
    src_offset = int(rng.integers(0, bc)) if params.variant is Variant.OUTOFPLACE else 0

    count_words = k if params.variant is not Variant.SEQUENCES else 0
    cursor = _roundup(max(count_words, 1), bc)
    src_base = -1
    if params.variant is Variant.OUTOFPLACE:
        src_base = cursor + src_offset
        cursor = _roundup(src_base + max(n, 1), bc)
    capacity = max(n, 1)
    stride = _roundup(capacity + bc, bc)
    bases = cursor + np.arange(k, dtype=np.int64) * stride + offsets
    space = cursor + k * stride
    if space > params.max_address_space:
        raise LayoutError(
            f"address space of {space} words needed for n={n}, k={k}; "
            f"limit is {params.max_address_space}"
        )
    return AddressPlan(0, bases.astype(np.int64), capacity, src_base, int(space))


@njit(cache=True)
def _pointer_positions(classes, bases, k):
    pos = bases.copy()
    out = np.empty(classes.shape[0], dtype=np.int64)
    for t in range(classes.shape[0]):
        x = classes[t]
        out[t] = pos[x]
        pos[x] += 1
    return out


def _draw(params: ProcessParams):
    rng = np.random.default_rng(params.seed)
    plan = layout_addresses(params, rng)
    classes = params.dist.sample(params.rounds, rng)
    return plan, classes


def build_trace(params: ProcessParams) -> tuple[Trace, AddressPlan, np.ndarray]:
    """Materialize the address trace of a run. Returns ``(trace, plan, classes)``."""
    plan, classes = _draw(params)
    n = params.rounds
    ptr = _pointer_positions(classes, plan.region_bases, params.k)
    ptag = int(POINTER_TAG[params.variant])
    if params.variant is Variant.SEQUENCES:
        addrs = ptr
        tags = np.full(n, ptag, dtype=np.int8)
    else:
        cols = [plan.count_base + classes, ptr]
        ctags = [int(Tag.COUNT), ptag]
        if params.variant is Variant.OUTOFPLACE:
            cols.insert(0, plan.src_base + np.arange(n, dtype=np.int64))
            ctags.insert(0, int(Tag.SRC))
        addrs = np.stack(cols, axis=1).ravel()
        tags = np.tile(np.array(ctags, dtype=np.int8), n)
    return Trace(addrs, tags), plan, classes


@dataclass
class ProcessRunReport:
    variant: Variant
    geom: CacheGeometry
    k: int
    seed: int
    rounds: int
    stats: MissStats
    class_counts: np.ndarray
    dist_name: str = "explicit"
    plan: AddressPlan | None = field(default=None, repr=False)

    def rate(self, tag) -> float:
        """Misses of ``tag`` per round (0 when there are no rounds)."""
        return self.stats[tag].misses / self.rounds if self.rounds else 0.0

    @property
    def per_round_rate_by_tag(self) -> dict[str, float]:
        tags = [Tag.SRC, Tag.COUNT, POINTER_TAG[self.variant]]
        if self.variant is not Variant.OUTOFPLACE:
            tags.remove(Tag.SRC)
        if self.variant is Variant.SEQUENCES:
            tags.remove(Tag.COUNT)
        return {t.name: self.rate(t) for t in tags}

    @property
    def total_rate(self) -> float:
        """Per-round misses summed over every tag the process emits."""
        return sum(self.per_round_rate_by_tag.values())

    def csv_rows(self) -> list[dict]:
        rows = []
        for name, rate in self.per_round_rate_by_tag.items():
            s = self.stats[Tag[name]]
            rows.append(
                dict(
                    variant=self.variant.value,
                    k=self.k,
                    B=self.geom.block_size,
                    C=self.geom.num_blocks,
                    n=self.rounds,
                    seed=self.seed,
                    tag=name,
                    accesses=s.accesses,
                    misses=s.misses,
                    compulsory=s.compulsory_misses,
                    conflict=s.conflict_misses,
                    dist=self.dist_name,
                    rounds=self.rounds,
                    rate_per_round=f"{rate:.9g}",
                )
            )
        return rows


CSV_FIELDS = [
    "variant", "k", "B", "C", "n", "seed", "tag", "accesses", "misses",
    "compulsory", "conflict", "dist", "rounds", "rate_per_round",
]


def run_process(params: ProcessParams) -> ProcessRunReport:
    trace, plan, classes = build_trace(params)
    sim = Simulator(params.geom, plan.address_space)
    stats = sim.run_trace(trace)
    counts = np.bincount(classes, minlength=params.k)
    return ProcessRunReport(
        params.variant, params.geom, params.k, params.seed, params.rounds,
        stats, counts, params.dist.name, plan,
    )


def _require(params: ProcessParams, variant: Variant) -> None:
    if params.variant is not variant:
        raise ValueError(f"expected variant {variant.value}, got {params.variant.value}")


def run_inplace_process(params: ProcessParams) -> ProcessRunReport:
    _require(params, Variant.INPLACE)
    return run_process(params)


def run_outofplace_process(params: ProcessParams) -> ProcessRunReport:
    _require(params, Variant.OUTOFPLACE)
    return run_process(params)


def run_sequences_process(params: ProcessParams) -> ProcessRunReport:
    _require(params, Variant.SEQUENCES)
    return run_process(params)

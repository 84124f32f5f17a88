import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distcache.cache_sim import (
    PAPER_L2,
    PRESETS,
    TINY,
    AddressError,
    CacheGeometry,
    MemRef,
    MissStats,
    Outcome,
    Simulator,
    Tag,
    Trace,
    TraceError,
    simulate,
)


def test_new_simulator_is_empty():
    sim = Simulator(CacheGeometry(4, 4), 64)
    assert sim.n_memory_blocks == 16
    assert not sim.seen.any()
    assert (sim.cache == -1).all()
    assert sim.stats.misses == 0 and sim.stats.accesses == 0


def test_minimal_geometry_accepted():
    sim = Simulator(CacheGeometry(1, 1), 8)
    assert sim.access(MemRef(3)) is Outcome.COMPULSORY
    assert sim.access(MemRef(3)) is Outcome.HIT


@pytest.mark.parametrize("B,C", [(3, 4), (4, 3), (0, 4), (4, 0), (-2, 4)])
def test_non_power_of_two_rejected(B, C):
    with pytest.raises(ValueError):
        CacheGeometry(B, C)


def test_address_space_must_be_positive():
    with pytest.raises(ValueError):
        Simulator(TINY, 0)


def test_presets():
    assert (PAPER_L2.B, PAPER_L2.C) == (8, 8192)
    assert (TINY.B, TINY.C) == (8, 128)
    assert PRESETS["tiny"] is TINY


def test_eviction_then_conflict():
    sim = Simulator(CacheGeometry(4, 4), 64)
    assert sim.access(MemRef(0)) is Outcome.COMPULSORY
    assert sim.access(MemRef(16)) is Outcome.COMPULSORY
    assert sim.access(MemRef(0)) is Outcome.CONFLICT


def test_intra_block_hit():
    sim = Simulator(CacheGeometry(4, 4), 64)
    assert sim.access(MemRef(0)) is Outcome.COMPULSORY
    assert sim.access(MemRef(1)) is Outcome.HIT


def test_distinct_sets_do_not_interact():
    sim = Simulator(CacheGeometry(4, 4), 64)
    assert sim.access(MemRef(0)) is Outcome.COMPULSORY
    assert sim.access(MemRef(20)) is Outcome.COMPULSORY
    assert sim.access(MemRef(0)) is Outcome.HIT
    assert sim.access(MemRef(20)) is Outcome.HIT


def test_out_of_range_access():
    sim = Simulator(CacheGeometry(4, 4), 64)
    with pytest.raises(AddressError):
        sim.access(MemRef(64))
    with pytest.raises(AddressError):
        sim.access(MemRef(-1))


def test_trace_error_reports_position():
    sim = Simulator(CacheGeometry(4, 4), 64)
    with pytest.raises(TraceError) as ei:
        sim.run_trace([MemRef(1), MemRef(2), MemRef(99)])
    assert ei.value.position == 2
    assert isinstance(ei.value, AddressError)


def test_empty_trace():
    assert simulate(TINY, Trace([])) == MissStats()


def test_identical_addresses():
    stats = simulate(TINY, Trace(np.full(50, 7)))
    assert stats.misses == 1
    assert stats[Tag.OTHER].compulsory_misses == 1
    assert stats.accesses == 50


def test_one_set_hand_check():
    # ten distinct blocks all mapping to set 0 of a B=4, C=4 cache
    geom = CacheGeometry(4, 4)
    addrs = [16 * i for i in range(10)]
    stats = simulate(geom, Trace(addrs))
    assert stats.misses == 10 and stats.total().compulsory_misses == 10
    # revisiting them in the same order misses every time, now as conflicts
    stats = simulate(geom, Trace(addrs + addrs))
    assert stats.total().compulsory_misses == 10
    assert stats.total().conflict_misses == 10


def test_per_tag_accounting():
    refs = [MemRef(0, Tag.COUNT), MemRef(100, Tag.DATA), MemRef(1, Tag.DATA), MemRef(0, Tag.COUNT)]
    sim = Simulator(CacheGeometry(4, 4), 128)
    stats = sim.run_trace(refs)
    assert stats[Tag.COUNT].accesses == 2
    assert stats[Tag.DATA].accesses == 2
    # 100 -> block 25 -> set 1; 0 and 1 -> block 0 -> set 0
    assert stats[Tag.COUNT].misses == 1
    assert stats[Tag.DATA].misses == 1
    assert stats[Tag.DATA].compulsory_misses == 1
    assert set(stats.tags()) == {Tag.COUNT, Tag.DATA}


def test_python_and_jitted_paths_agree():
    rng = np.random.default_rng(5)
    addrs = rng.integers(0, 4096, 5000)
    tags = rng.integers(0, 6, 5000)
    trace = Trace(addrs, tags)
    geom = CacheGeometry(8, 16)
    a = Simulator(geom, 4096)
    for ref in trace:
        a.access(ref)
    b = Simulator(geom, 4096)
    b.run_trace(trace)
    assert a.stats == b.stats


def test_trace_dump_load_roundtrip(tmp_path):
    trace = Trace([0, 5, 17], [Tag.COUNT, Tag.SRC, Tag.DEST])
    p = tmp_path / "t.txt"
    trace.dump(p)
    assert p.read_text().splitlines()[0] == "COUNT,0"
    back = Trace.load(p)
    assert np.array_equal(back.addresses, trace.addresses)
    assert np.array_equal(back.tags, trace.tags)


def test_trace_load_rejects_garbage(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("COUNT,1\nBOGUS,2\n")
    with pytest.raises(ValueError, match=":2:"):
        Trace.load(p)


def test_missstats_arithmetic():
    a = simulate(TINY, Trace([0, 8, 0]))
    b = simulate(TINY, Trace([0]))
    assert (a - b).misses == a.misses - b.misses
    assert (a + b).accesses == 4
    assert a.as_dict()["OTHER"]["accesses"] == 3


geoms = st.sampled_from([CacheGeometry(1, 1), CacheGeometry(2, 4), CacheGeometry(4, 4),
                         CacheGeometry(8, 16), CacheGeometry(16, 2)])


@settings(max_examples=200, deadline=None)
@given(geom=geoms, addrs=st.lists(st.integers(0, 511), max_size=300),
       tags=st.lists(st.integers(0, 5), min_size=300, max_size=300))
def test_stats_invariants(geom, addrs, tags):
    trace = Trace(addrs, tags[: len(addrs)])
    stats = simulate(geom, trace, 512)
    t = stats.table
    # misses split exactly into the two kinds, and never exceed accesses
    assert (t[:, 1] == t[:, 2] + t[:, 3]).all()
    assert (t[:, 1] <= t[:, 0]).all()
    # compulsory misses count distinct memory blocks, whatever the geometry
    assert stats.total().compulsory_misses == len({a // geom.B for a in addrs})
    # deterministic
    assert simulate(geom, trace, 512) == stats


@settings(max_examples=100, deadline=None)
@given(start=st.integers(0, 1000), w=st.integers(1, 1024))
def test_sequential_scan_law(start, w):
    # a fresh scan that fits in the cache misses once per touched block
    geom = CacheGeometry(8, 256)
    stats = simulate(geom, Trace(np.arange(start, start + w)), 4096)
    blocks = (start + w - 1) // 8 - start // 8 + 1
    assert stats.misses == blocks
    assert stats.total().compulsory_misses == blocks

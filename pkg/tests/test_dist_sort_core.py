import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distcache.cache_sim import CacheGeometry, Simulator, Tag
from distcache.dist_sort_core import (
    Classifier,
    ClassifierDomainError,
    Layout,
    count_phase,
    permute_in_place,
    permute_out_of_place,
    traced_permute,
)
from distcache.distributions import uniform
from distcache.stochastic_process import ProcessParams, run_process


def test_count_small_example():
    c = count_phase(np.array([2, 0, 1]), Classifier.identity(3))
    assert c.count.tolist() == [0, 1, 2]
    assert c.start.tolist() == [0, 1, 2] and c.start is not c.count


def test_count_empty():
    c = count_phase(np.array([], dtype=np.int64), Classifier.identity(4))
    assert c.count.tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("key", [0, 1, 3])
def test_count_equal_keys(key):
    n = 37
    c = count_phase(np.full(n, key), Classifier.identity(4))
    hist = np.bincount(np.full(n, key), minlength=4)
    assert c.count.tolist() == [int(hist[:j].sum()) for j in range(4)]


def test_out_of_place_small_example():
    cls = Classifier.identity(3)
    data = np.array([2, 0, 1])
    assert permute_out_of_place(data, count_phase(data, cls), cls).tolist() == [0, 1, 2]


def test_out_of_place_keeps_grouped_input():
    cls = Classifier.range(0.0, 1.0, 4)
    data = np.array([0.1, 0.2, 0.3, 0.6, 0.55, 0.9])
    assert np.array_equal(permute_out_of_place(data, count_phase(data, cls), cls), data)


def test_in_place_small_example():
    cls = Classifier.identity(3)
    data = np.array([2, 0, 1])
    c = count_phase(data, cls)
    assert permute_in_place(data, c, c.start, cls) == 3
    assert data.tolist() == [0, 1, 2]


def test_in_place_grouped_input_unchanged():
    cls = Classifier.identity(3)
    data = np.array([0, 0, 1, 2, 2, 2])
    c = count_phase(data, cls)
    # every key is its own one-step cycle
    assert permute_in_place(data, c, None, cls) == 6
    assert data.tolist() == [0, 0, 1, 2, 2, 2]


def test_in_place_needs_numpy():
    with pytest.raises(TypeError):
        permute_in_place([1, 0], None, None, Classifier.identity(2))


def test_classifiers():
    r = Classifier.range(0.0, 1.0, 4)
    assert r(np.array([0.0, 0.24, 0.25, np.nextafter(1.0, 0)])).tolist() == [0, 0, 1, 3]
    with pytest.raises(ClassifierDomainError):
        r(np.array([1.0]))
    with pytest.raises(ValueError):
        Classifier.range(1.0, 1.0, 4)
    t = Classifier.top_bits(4, 0xF)
    assert t(np.array([0x00, 0x1F, 0xF3], dtype=np.uint64)).tolist() == [0, 1, 15]
    t2 = Classifier.top_bits(0, 0xFF, offset=16, k=8)
    with pytest.raises(ClassifierDomainError):
        t2(np.array([3], dtype=np.uint64))
    with pytest.raises(ClassifierDomainError):
        Classifier.custom(lambda x: np.asarray(x) + 5, 4)(np.array([0]))
    assert "range" in repr(r)


def _oracle(data, classes, k):
    order = np.argsort(classes, kind="stable")
    return data[order]


def _random_case(rng):
    n = int(rng.integers(0, 2000))
    k = int(rng.choice([1, 2, 3, 8, 17, 64, 256]))
    kind = rng.integers(0, 4)
    if kind == 0:
        classes = rng.integers(0, k, n)
    elif kind == 1:
        classes = np.full(n, int(rng.integers(0, k)))
    elif kind == 2:
        pair = rng.integers(0, k, 2)
        classes = np.where(rng.random(n) < 0.5, pair[0], pair[1])
    else:
        classes = np.minimum(rng.geometric(0.3, n) - 1, k - 1)
    # keys carry their class in the high part and a tag in the low part
    data = classes.astype(np.int64) * 1_000_000 + rng.integers(0, 1_000_000, n)
    return data, k


@pytest.mark.parametrize("seed", range(40))
def test_permutes_against_counting_sort(seed):
    rng = np.random.default_rng(seed)
    data, k = _random_case(rng)
    cls = Classifier.custom(lambda x: np.asarray(x) // 1_000_000, k)
    classes = cls(data)
    want = _oracle(data, classes, k)
    c = count_phase(data, cls)
    out = permute_out_of_place(data, c, cls)
    assert np.array_equal(out, want)  # stable
    ip = data.copy()
    assert permute_in_place(ip, c, c.start, cls) == data.size
    assert np.array_equal(np.sort(ip), np.sort(data))
    got = cls(ip)
    assert np.all(np.diff(got) >= 0)
    for x in np.unique(classes):
        assert np.array_equal(np.sort(ip[got == x]), np.sort(data[classes == x]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 15), max_size=200))
def test_in_place_property(keys):
    data = np.array(keys, dtype=np.int64)
    cls = Classifier.identity(16)
    c = count_phase(data, cls)
    before = np.sort(data)
    swaps = permute_in_place(data, c, c.start, cls)
    assert swaps == len(keys)
    assert np.array_equal(data, before)  # identity classes: grouped == sorted


def test_traced_in_place_small_example():
    cls = Classifier.identity(3)
    out, trace = traced_permute("inplace", np.array([2, 0, 1]), cls)
    assert out.tolist() == [0, 1, 2]
    assert trace.count(Tag.COUNT) == 3 and trace.count(Tag.DATA) == 3
    assert trace.count(Tag.OTHER) > 0
    lay = Layout.contiguous(3, 3)
    # the single cycle starts at the leader, index 2
    assert trace[0].address == lay.data + 2 and trace[0].tag is Tag.OTHER


def test_traced_out_of_place_counts():
    rng = np.random.default_rng(0)
    data = rng.integers(0, 64, 5000)
    out, trace = traced_permute("outofplace", data, Classifier.identity(64))
    assert np.array_equal(out, np.sort(data, kind="stable"))
    for tag in (Tag.SRC, Tag.COUNT, Tag.DEST):
        assert trace.count(tag) == 5000
    assert len(trace) == 15000


def test_traced_rejects_unknown_variant():
    with pytest.raises(ValueError):
        traced_permute("sideways", np.array([0]), Classifier.identity(1))
    with pytest.raises(ValueError):
        traced_permute("outofplace", np.array([0]), Classifier.identity(1), Layout(0, 1, 2))


def test_traced_empty():
    out, trace = traced_permute("inplace", np.array([], dtype=np.int64), Classifier.identity(4))
    assert out.size == 0 and len(trace) == 0


def test_traced_permute_matches_process_rates():
    # real permute of uniform keys vs the process model: count and pointer
    # accesses should miss at about the same per-key rate
    n, k = 10**6, 32
    geom = CacheGeometry(8, 128)
    rng = np.random.default_rng(1)
    data = rng.integers(0, k, n)
    lay = Layout.contiguous(n, k, geom.block_size)
    _, trace = traced_permute("outofplace", data, Classifier.identity(k), lay)
    stats = Simulator(geom, lay.dest + n).run_trace(trace)
    real = (stats[Tag.COUNT].misses + stats[Tag.DEST].misses) / n
    rep = run_process(ProcessParams(uniform(k), n, geom, seed=1, variant="outofplace"))
    model = rep.rate(Tag.COUNT) + rep.rate(Tag.DEST)
    assert abs(real - model) <= 0.10 * model

import pytest

from bandsim.cache import LFUCache, LRUCache, make_cache


def test_lru_basics():
    c = LRUCache(2)
    assert not c.lookup(1)
    c.insert(1)
    assert c.lookup(1)
    c = LRUCache(2)
    c.insert("A"), c.insert("B")
    c.lookup("A")
    assert c.insert("C") == "B"
    assert not c.lookup("B")
    c = LRUCache(1)
    c.insert("A"), c.insert("B")
    assert "B" in c and "A" not in c


def test_lfu_evicts_least_frequent():
    c = LFUCache(2)
    c.insert("A"), c.insert("B")
    for _ in range(3):
        c.lookup("A")
    c.lookup("B")
    assert c.insert("C") == "B"
    assert "A" in c and "C" in c


def test_counters_and_zero_capacity():
    c = make_cache("lru", 0)
    assert c.insert(5) is None and not c.lookup(5)
    c = make_cache("lfu", 3)
    c.insert(1)
    c.lookup(1), c.lookup(2)
    assert (c.counters.hits, c.counters.misses) == (1, 1)
    assert c.counters.hit_ratio == 0.5
    with pytest.raises(ValueError):
        make_cache("fifo", 3)

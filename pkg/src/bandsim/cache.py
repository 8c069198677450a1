"""Per-peer chunk caches with LRU or LFU eviction."""

from __future__ import annotations

from collections import OrderedDict, defaultdict
from dataclasses import dataclass

CACHE_POLICIES = ("lru", "lfu")


@dataclass
class CacheCounters:
    hits: int = 0
    misses: int = 0
    insertions: int = 0
    evictions: int = 0

    @property
    def hit_ratio(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


class LRUCache:
    """Evicts the chunk whose last access is oldest."""

    policy = "lru"

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._entries: OrderedDict[int, None] = OrderedDict()
        self.counters = CacheCounters()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, chunk):
        return chunk in self._entries

    def lookup(self, chunk: int) -> bool:
        if chunk in self._entries:
            self._entries.move_to_end(chunk)
            self.counters.hits += 1
            return True
        self.counters.misses += 1
        return False

    def insert(self, chunk: int) -> int | None:
        """Add ``chunk``; returns the evicted chunk, if any."""
        if self.capacity == 0 or chunk in self._entries:
            return None
        victim = None
        if len(self._entries) >= self.capacity:
            victim, _ = self._entries.popitem(last=False)
            self.counters.evictions += 1
        self._entries[chunk] = None
        self.counters.insertions += 1
        return victim


class LFUCache:
    """Evicts the least frequently used chunk, the least recent among ties.

    Frequencies count the insertion plus every hit while the chunk is cached.
    """

    policy = "lfu"

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._freq: dict[int, int] = {}
        self._by_freq: defaultdict[int, OrderedDict[int, None]] = defaultdict(OrderedDict)
        self._min = 0
        self.counters = CacheCounters()

    def __len__(self):
        return len(self._freq)

    def __contains__(self, chunk):
        return chunk in self._freq

    def frequency(self, chunk: int) -> int:
        return self._freq.get(chunk, 0)

    def _bump(self, chunk: int) -> None:
        f = self._freq[chunk]
        group = self._by_freq[f]
        del group[chunk]
        if not group:
            del self._by_freq[f]
            if self._min == f:
                self._min = f + 1
        self._freq[chunk] = f + 1
        self._by_freq[f + 1][chunk] = None

    def lookup(self, chunk: int) -> bool:
        if chunk in self._freq:
            self._bump(chunk)
            self.counters.hits += 1
            return True
        self.counters.misses += 1
        return False

    def insert(self, chunk: int) -> int | None:
        if self.capacity == 0 or chunk in self._freq:
            return None
        victim = None
        if len(self._freq) >= self.capacity:
            group = self._by_freq[self._min]
            victim, _ = group.popitem(last=False)
            if not group:
                del self._by_freq[self._min]
            del self._freq[victim]
            self.counters.evictions += 1
        self._freq[chunk] = 1
        self._by_freq[1][chunk] = None
        self._min = 1
        self.counters.insertions += 1
        return victim


def make_cache(policy: str, capacity: int):
    if policy == "lru":
        return LRUCache(capacity)
    if policy == "lfu":
        return LFUCache(capacity)
    raise ValueError(f"cache policy must be one of {CACHE_POLICIES}; got {policy!r}")

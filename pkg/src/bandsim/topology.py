"""Peer graph construction and mutation.

The overlay is stored as ragged k-bucket tables in flat arrays so the same
structure can be read by the pure-Python reference engine and by the
compiled request kernel.  Every connection lives in bucket
``commonBits(p, q)`` on *both* endpoints and carries one edge id, which
indexes the per-connection accounting arrays held by the engine.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .addressing import DEFAULT_BITS, MAX_BITS, MIN_BITS, to_binary

log = logging.getLogger(__name__)

ADDRESS_ASSIGNMENTS = ("random", "two-choices")
CLIQUE_MODES = ("none", "internal", "external")
SHUFFLE_POLICIES = ("none", "originators", "all")

# Slack each bucket keeps above its nominal size for shuffle-time inserts.
OVERFLOW_FACTOR = 3
OVERFLOW_EXTRA = 16


@dataclass(frozen=True)
class NetworkConfig:
    size: int = 10_000
    address_bits: int = DEFAULT_BITS
    bucket_size: int = 8
    storage_depth: int = 11
    originator_fraction: float = 0.005
    address_assignment: str = "random"
    clique_mode: str = "none"
    shuffle_policy: str = "none"
    originator_bucket_size: int | None = None
    seed: int = 0

    def validate(self) -> None:
        errors = []
        if not MIN_BITS <= self.address_bits <= MAX_BITS:
            errors.append(f"address_bits must be in [{MIN_BITS}, {MAX_BITS}]")
        elif self.size > (1 << self.address_bits):
            errors.append(f"size {self.size} exceeds address space 2^{self.address_bits}")
        if self.size < 1:
            errors.append("size must be positive")
        if self.bucket_size < 1:
            errors.append("bucket_size must be positive")
        if self.originator_bucket_size is not None and self.originator_bucket_size < 1:
            errors.append("originator_bucket_size must be positive")
        if not 0 <= self.storage_depth < self.address_bits:
            errors.append("storage_depth must satisfy 0 <= depth < address_bits")
        if not 0 < self.originator_fraction <= 1:
            errors.append("originator_fraction must be in (0, 1]")
        if self.address_assignment not in ADDRESS_ASSIGNMENTS:
            errors.append(f"address_assignment must be one of {ADDRESS_ASSIGNMENTS}")
        if self.clique_mode not in CLIQUE_MODES:
            errors.append(f"clique_mode must be one of {CLIQUE_MODES}")
        if self.shuffle_policy not in SHUFFLE_POLICIES:
            errors.append(f"shuffle_policy must be one of {SHUFFLE_POLICIES}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def originator_count(self) -> int:
        return max(1, int(round(self.originator_fraction * self.size)))


# ---------------------------------------------------------------------------
# compiled helpers


@nb.njit(cache=True, inline="always")
def _bit_length(x):
    x = np.uint64(x)
    n = 0
    for step in (32, 16, 8, 4, 2, 1):
        if x >> np.uint64(step):
            x >>= np.uint64(step)
            n += step
    return n + (1 if x else 0)


@nb.njit(cache=True, inline="always")
def common_prefix(a, b, bits):
    return bits - _bit_length(a ^ b)


@nb.njit(cache=True)
def _sibling_range(addr, level, bits, sorted_addr):
    """Index range in ``sorted_addr`` of addresses sharing exactly ``level``
    prefix bits with ``addr``."""
    shift = np.uint64(bits - level - 1)
    prefix = (addr >> shift) ^ np.uint64(1)
    low = prefix << shift
    lo = np.searchsorted(sorted_addr, low)
    high = (prefix + np.uint64(1)) << shift
    if high == np.uint64(0):  # wrapped past 2**64
        hi = sorted_addr.shape[0]
    else:
        hi = np.searchsorted(sorted_addr, high)
    return lo, hi


@nb.njit(cache=True)
def _is_linked(p, q, level, slot_start, count, nbr):
    base = slot_start[p, level]
    for s in range(count[p, level]):
        if nbr[base + s] == q:
            return True
    return False


@nb.njit(cache=True)
def _link(p, q, level, slot_start, count, nbr, eid, edge_lo, edge_hi, edge_level, edge_alive, free_edges, free_top):
    """Insert a bidirectional connection; returns (edge id, new free_top)."""
    top = free_top
    e = free_edges[top - 1]
    top -= 1
    sp = slot_start[p, level] + count[p, level]
    nbr[sp] = q
    eid[sp] = e
    count[p, level] += 1
    sq = slot_start[q, level] + count[q, level]
    nbr[sq] = p
    eid[sq] = e
    count[q, level] += 1
    if p < q:
        edge_lo[e] = p
        edge_hi[e] = q
    else:
        edge_lo[e] = q
        edge_hi[e] = p
    edge_level[e] = level
    edge_alive[e] = True
    return e, top


@nb.njit(cache=True)
def _remove_entry(p, q, level, slot_start, count, nbr, eid):
    base = slot_start[p, level]
    c = count[p, level]
    for s in range(c):
        if nbr[base + s] == q:
            nbr[base + s] = nbr[base + c - 1]
            eid[base + s] = eid[base + c - 1]
            count[p, level] = c - 1
            return


@nb.njit(cache=True)
def _fill_bucket(p, level, need, limit_kind, kvec, slot_cap, sorted_idx, sorted_addr, addresses, bits,
                 slot_start, count, nbr, eid, edge_lo, edge_hi, edge_level, edge_alive,
                 free_edges, free_top, created, n_created, originators_first, is_orig):
    """Draw up to ``need`` uniformly chosen eligible peers for bucket ``level`` of ``p``.

    ``limit_kind`` 0: counterpart must be below its nominal bucket size
    (generation); 1: counterpart must be below its hard slot capacity
    (shuffle inserts may exceed the nominal size).
    """
    lo, hi = _sibling_range(addresses[p], level, bits, sorted_addr)
    span = hi - lo
    if span <= 0 or need <= 0:
        return free_top, n_created
    got = 0
    if originators_first:
        # originators inside the range first, in random order
        tmp = np.empty(span, dtype=np.int64)
        m = 0
        for j in range(lo, hi):
            if is_orig[sorted_idx[j]]:
                tmp[m] = sorted_idx[j]
                m += 1
        for j in range(m):
            r = j + np.random.randint(m - j)
            t = tmp[j]
            tmp[j] = tmp[r]
            tmp[r] = t
            q = tmp[j]
            limit = kvec[q] if limit_kind == 0 else slot_cap[q, level]
            if count[q, level] >= limit or _is_linked(p, q, level, slot_start, count, nbr):
                continue
            e, free_top = _link(p, q, level, slot_start, count, nbr, eid, edge_lo, edge_hi, edge_level,
                                edge_alive, free_edges, free_top)
            created[n_created] = e
            n_created += 1
            got += 1
            if got == need:
                return free_top, n_created
    # rejection sampling first; exhaustive shuffle when the range is crowded
    attempts = 8 * (need - got) + 32 if span > 2 * need else 0
    while got < need and attempts > 0:
        attempts -= 1
        q = sorted_idx[lo + np.random.randint(span)]
        limit = kvec[q] if limit_kind == 0 else slot_cap[q, level]
        if count[q, level] >= limit or _is_linked(p, q, level, slot_start, count, nbr):
            continue
        e, free_top = _link(p, q, level, slot_start, count, nbr, eid, edge_lo, edge_hi, edge_level,
                            edge_alive, free_edges, free_top)
        created[n_created] = e
        n_created += 1
        got += 1
    if got < need:
        tmp = np.empty(span, dtype=np.int64)
        for j in range(span):
            tmp[j] = sorted_idx[lo + j]
        for j in range(span):
            r = j + np.random.randint(span - j)
            t = tmp[j]
            tmp[j] = tmp[r]
            tmp[r] = t
            q = tmp[j]
            limit = kvec[q] if limit_kind == 0 else slot_cap[q, level]
            if count[q, level] >= limit or _is_linked(p, q, level, slot_start, count, nbr):
                continue
            e, free_top = _link(p, q, level, slot_start, count, nbr, eid, edge_lo, edge_hi, edge_level,
                                edge_alive, free_edges, free_top)
            created[n_created] = e
            n_created += 1
            got += 1
            if got == need:
                break
    return free_top, n_created


@nb.njit(cache=True)
def _generate(seed, order, kvec, slot_cap, sorted_idx, sorted_addr, addresses, bits, slot_start, count, nbr,
              eid, edge_lo, edge_hi, edge_level, edge_alive, free_edges, free_top, is_orig, clique):
    np.random.seed(seed)
    created = np.empty(edge_lo.shape[0], dtype=np.int64)
    n_created = 0
    for p in order:
        for level in range(bits):
            need = kvec[p] - count[p, level]
            first = clique and is_orig[p]
            free_top, n_created = _fill_bucket(
                p, level, need, 0, kvec, slot_cap, sorted_idx, sorted_addr, addresses, bits, slot_start,
                count, nbr, eid, edge_lo, edge_hi, edge_level, edge_alive, free_edges, free_top, created,
                n_created, first, is_orig)
    return free_top


@nb.njit(cache=True)
def _shuffle(seed, order, kvec, slot_cap, sorted_idx, sorted_addr, addresses, bits, slot_start, count, nbr,
             eid, edge_lo, edge_hi, edge_level, edge_alive, free_edges, free_top, is_orig):
    np.random.seed(seed)
    dropped = np.empty((edge_lo.shape[0], 4), dtype=np.int64)
    n_dropped = 0
    created = np.empty(edge_lo.shape[0], dtype=np.int64)
    n_created = 0
    born = np.zeros(edge_lo.shape[0], dtype=np.bool_)
    for p in order:
        for level in range(bits):
            base = slot_start[p, level]
            for s in range(count[p, level]):
                q = nbr[base + s]
                e = eid[base + s]
                _remove_entry(q, p, level, slot_start, count, nbr, eid)
                edge_alive[e] = False
                free_edges[free_top] = e
                free_top += 1
                dropped[n_dropped, 0] = edge_lo[e]
                dropped[n_dropped, 1] = edge_hi[e]
                dropped[n_dropped, 2] = e
                dropped[n_dropped, 3] = born[e]
                born[e] = False
                n_dropped += 1
            count[p, level] = 0
            start = n_created
            free_top, n_created = _fill_bucket(
                p, level, kvec[p], 1, kvec, slot_cap, sorted_idx, sorted_addr, addresses, bits, slot_start,
                count, nbr, eid, edge_lo, edge_hi, edge_level, edge_alive, free_edges, free_top, created,
                n_created, False, is_orig)
            for j in range(start, n_created):
                born[created[j]] = True
    # connections both made and removed within the round are not reported as dropped
    keep = dropped[:n_dropped, 3] == 0
    return free_top, dropped[:n_dropped][keep, :3], created[:n_created]


@nb.njit(cache=True)
def _component_size(n, bits, slot_start, count, nbr):
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    stack[0] = 0
    seen[0] = True
    top = 1
    reached = 1
    while top > 0:
        top -= 1
        p = stack[top]
        for level in range(bits):
            base = slot_start[p, level]
            for s in range(count[p, level]):
                q = nbr[base + s]
                if not seen[q]:
                    seen[q] = True
                    reached += 1
                    stack[top] = q
                    top += 1
    return reached


# ---------------------------------------------------------------------------


def _no_edges():
    return np.empty((0, 3), dtype=np.int64)


@dataclass
class ShuffleReport:
    """Connections removed and created by one shuffle round.

    Both arrays hold (low id, high id, edge id) rows.  ``dropped`` lists
    connections that existed before the round; ``created`` lists only
    connections still alive after it.  Edge ids may be recycled, so the
    balance arrays of a dropped id stay untouched until the engine has read
    them.  The engine discards any
    outstanding balance on dropped connections and fills ``balances`` with
    what was discarded.
    """

    dropped: np.ndarray = field(default_factory=_no_edges)
    created: np.ndarray = field(default_factory=_no_edges)
    balances: np.ndarray | None = None


class Network:
    """Peers, roles and bidirectional k-bucket tables."""

    def __init__(self, addresses, is_originator, bits, depth, bucket_size, originator_bucket_size=None):
        self.addresses = np.asarray(addresses, dtype=np.uint64)
        self.is_originator = np.asarray(is_originator, dtype=np.bool_)
        self.n = len(self.addresses)
        if len(np.unique(self.addresses)) != self.n:
            raise ValueError("peer addresses must be unique")
        self.bits = int(bits)
        self.depth = int(depth)
        self.bucket_size = int(bucket_size)
        self.originator_bucket_size = int(originator_bucket_size or bucket_size)
        self.kvec = np.where(self.is_originator, self.originator_bucket_size, self.bucket_size).astype(np.int64)

        self.sorted_idx = np.argsort(self.addresses, kind="stable").astype(np.int64)
        self.sorted_addr = self.addresses[self.sorted_idx]
        self._layout()

    def _layout(self):
        n, bits = self.n, self.bits
        eligible = np.zeros((n, bits), dtype=np.int64)
        for level in range(bits):
            shift = np.uint64(bits - level - 1)
            sib = ((self.addresses >> shift) ^ np.uint64(1)) << shift
            lo = np.searchsorted(self.sorted_addr, sib)
            end = sib + (np.uint64(1) << shift)
            hi = np.where(end == 0, n, np.searchsorted(self.sorted_addr, end))
            eligible[:, level] = hi - lo
        n_orig = int(self.is_originator.sum())
        hard = OVERFLOW_FACTOR * self.kvec + OVERFLOW_EXTRA
        if self.originator_bucket_size > self.bucket_size:
            hard = np.where(self.is_originator, hard, hard + n_orig)
        self.slot_cap = np.minimum(eligible, hard[:, None]).astype(np.int64)
        flat = self.slot_cap.ravel()
        starts = np.zeros_like(flat)
        np.cumsum(flat[:-1], out=starts[1:])
        self.slot_start = starts.reshape(n, bits)
        total = int(flat.sum())
        self.count = np.zeros((n, bits), dtype=np.int64)
        self.nbr = np.full(total, -1, dtype=np.int64)
        self.eid = np.full(total, -1, dtype=np.int64)
        max_edges = total // 2 + 1
        self.edge_lo = np.full(max_edges, -1, dtype=np.int64)
        self.edge_hi = np.full(max_edges, -1, dtype=np.int64)
        self.edge_level = np.full(max_edges, -1, dtype=np.int64)
        self.edge_alive = np.zeros(max_edges, dtype=np.bool_)
        self.free_edges = np.arange(max_edges - 1, -1, -1, dtype=np.int64)
        self.free_top = max_edges

    # -- queries -----------------------------------------------------------

    @property
    def max_edges(self) -> int:
        return len(self.edge_lo)

    def bucket(self, peer: int, level: int) -> np.ndarray:
        base = self.slot_start[peer, level]
        return self.nbr[base:base + self.count[peer, level]]

    def bucket_edges(self, peer: int, level: int) -> np.ndarray:
        base = self.slot_start[peer, level]
        return self.eid[base:base + self.count[peer, level]]

    def neighbors(self, peer: int) -> list[int]:
        out = []
        for level in range(self.bits):
            out.extend(int(q) for q in self.bucket(peer, level))
        return out

    def degree(self) -> np.ndarray:
        return self.count.sum(axis=1)

    def edge_between(self, p: int, q: int) -> int:
        level = self.common_bits(p, q)
        base = self.slot_start[p, level]
        for s in range(self.count[p, level]):
            if self.nbr[base + s] == q:
                return int(self.eid[base + s])
        raise KeyError(f"peers {p} and {q} are not connected")

    def common_bits(self, p: int, q: int) -> int:
        return self.bits - (int(self.addresses[p]) ^ int(self.addresses[q])).bit_length()

    def originators(self) -> np.ndarray:
        return np.flatnonzero(self.is_originator)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        return _component_size(self.n, self.bits, self.slot_start, self.count, self.nbr) == self.n

    def neighborhood_ids(self) -> np.ndarray:
        return (self.addresses >> np.uint64(self.bits - self.depth)).astype(np.int64)

    def copy(self) -> "Network":
        other = object.__new__(Network)
        other.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})
        return other

    def packed(self) -> "Network":
        """Copy whose storage holds only the current connections.

        Queries behave as before, but no bucket has room to grow, so the copy
        is meant for reporting rather than further shuffling or ``connect``.
        Edge ids are renumbered.
        """
        other = object.__new__(Network)
        other.__dict__.update(self.__dict__)
        alive = np.flatnonzero(self.edge_alive)
        remap = np.full(self.max_edges, -1, dtype=np.int64)
        remap[alive] = np.arange(len(alive))
        flat = self.count.ravel()
        starts = np.zeros_like(flat)
        np.cumsum(flat[:-1], out=starts[1:])
        idx = np.repeat(self.slot_start.ravel() - starts, flat) + np.arange(int(flat.sum()))
        other.slot_cap = self.count.copy()
        other.slot_start = starts.reshape(self.n, self.bits)
        other.count = self.count.copy()
        other.nbr = self.nbr[idx]
        other.eid = remap[self.eid[idx]]
        other.edge_lo = self.edge_lo[alive]
        other.edge_hi = self.edge_hi[alive]
        other.edge_level = self.edge_level[alive]
        other.edge_alive = np.ones(len(alive), dtype=np.bool_)
        other.free_edges = np.zeros(0, dtype=np.int64)
        other.free_top = 0
        return other

    # -- construction ------------------------------------------------------

    def _fill(self, seed: int, order: np.ndarray, clique: bool) -> None:
        self.free_top = _generate(
            seed, order, self.kvec, self.slot_cap, self.sorted_idx, self.sorted_addr, self.addresses, self.bits,
            self.slot_start, self.count, self.nbr, self.eid, self.edge_lo, self.edge_hi, self.edge_level,
            self.edge_alive, self.free_edges, self.free_top, self.is_originator, clique)

    def connect(self, p: int, q: int) -> int:
        """Add the connection p-q by hand and return its edge id."""
        if p == q:
            raise ValueError("a peer cannot connect to itself")
        level = self.common_bits(p, q)
        if q in self.bucket(p, level).tolist():
            raise ValueError(f"peers {p} and {q} are already connected")
        if self.count[p, level] >= self.slot_cap[p, level] or self.count[q, level] >= self.slot_cap[q, level]:
            raise ValueError(f"bucket {level} is full")
        e, self.free_top = _link(p, q, level, self.slot_start, self.count, self.nbr, self.eid, self.edge_lo,
                                 self.edge_hi, self.edge_level, self.edge_alive, self.free_edges, self.free_top)
        return int(e)

    def check_invariants(self) -> None:
        """Raise AssertionError on any bucket or bidirectionality violation."""
        for p in range(self.n):
            for level in range(self.bits):
                entries = self.bucket(p, level)
                edges = self.bucket_edges(p, level)
                assert len(set(entries.tolist())) == len(entries), f"duplicate neighbour at peer {p}"
                for q, e in zip(entries.tolist(), edges.tolist()):
                    assert q != p, f"self loop at {p}"
                    assert self.common_bits(p, q) == level, f"peer {q} misfiled in bucket {level} of {p}"
                    assert p in self.bucket(q, level).tolist(), f"{p}->{q} not mirrored"
                    assert self.edge_alive[e] and {self.edge_lo[e], self.edge_hi[e]} == {p, q}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["peerId", "address", "isOriginator", "neighborIds"])
            for p in range(self.n):
                writer.writerow([p, to_binary(int(self.addresses[p]), self.bits), int(self.is_originator[p]),
                                 ";".join(str(q) for q in self.neighbors(p))])


# ---------------------------------------------------------------------------
# address assignment


def _draw_unique(rng: np.random.Generator, count: int, bits: int, used: set[int]) -> list[int]:
    out = []
    space = 1 << bits
    if len(used) + count > space:
        raise ValueError("address space exhausted")
    while len(out) < count:
        batch = rng.integers(0, space, size=2 * (count - len(out)) + 8, dtype=np.uint64, endpoint=False)
        for v in batch.tolist():
            if v not in used:
                used.add(v)
                out.append(v)
                if len(out) == count:
                    break
    return out


def random_addresses(rng: np.random.Generator, n: int, bits: int) -> np.ndarray:
    return np.array(_draw_unique(rng, n, bits, set()), dtype=np.uint64)


def two_choices_address(rng: np.random.Generator, occupancy: dict[int, int], bits: int, depth: int,
                        used: set[int]) -> int:
    """Pick the sparser of two fresh candidate addresses.

    ``occupancy`` maps a ``depth``-bit neighbourhood prefix to its peer count;
    it and ``used`` are updated in place.  Ties go to the first draw.
    """
    first, second = _draw_unique(rng, 2, bits, used)
    shift = bits - depth
    n1 = occupancy.get(first >> shift, 0)
    n2 = occupancy.get(second >> shift, 0)
    chosen, rejected = (second, first) if n2 < n1 else (first, second)
    used.discard(rejected)
    occupancy[chosen >> shift] = occupancy.get(chosen >> shift, 0) + 1
    return chosen


def two_choices_addresses(rng: np.random.Generator, n: int, bits: int, depth: int) -> np.ndarray:
    occupancy: dict[int, int] = {}
    used: set[int] = set()
    return np.array([two_choices_address(rng, occupancy, bits, depth, used) for _ in range(n)], dtype=np.uint64)


def neighborhood_size(network: Network, prefix: int) -> int:
    """Number of peers whose top ``depth`` bits equal ``prefix``."""
    if network.n == 0:
        return 0
    return int(np.count_nonzero(network.neighborhood_ids() == prefix))


def neighborhood_sizes(network: Network) -> np.ndarray:
    """Peer count of every one of the 2**depth neighbourhoods."""
    return np.bincount(network.neighborhood_ids(), minlength=1 << network.depth)


# ---------------------------------------------------------------------------
# generation and mutation


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


def generate_network(config: NetworkConfig, rng: np.random.Generator, max_attempts: int = 20) -> Network:
    """Build a connected network for ``config``.

    Disconnected draws are regenerated from the same stream; at default
    parameters this never triggers.
    """
    config.validate()
    for attempt in range(max_attempts):
        if config.address_assignment == "two-choices":
            addresses = two_choices_addresses(rng, config.size, config.address_bits, config.storage_depth)
        else:
            addresses = random_addresses(rng, config.size, config.address_bits)
        is_orig = np.zeros(config.size, dtype=np.bool_)
        is_orig[rng.choice(config.size, size=config.originator_count, replace=False)] = True
        net = Network(addresses, is_orig, config.address_bits, config.storage_depth, config.bucket_size,
                      config.originator_bucket_size)
        order = rng.permutation(config.size).astype(np.int64)
        net._fill(_seed(rng), order, config.clique_mode == "internal")
        if net.is_connected():
            return net
        log.warning("generated network is disconnected (attempt %d); regenerating", attempt + 1)
    raise RuntimeError(f"could not generate a connected network in {max_attempts} attempts")


def form_internal_clique(network: Network, rng: np.random.Generator) -> Network:
    """Refill every bucket, letting originators take eligible originators first."""
    net = Network(network.addresses, network.is_originator, network.bits, network.depth, network.bucket_size,
                  network.originator_bucket_size)
    order = rng.permutation(net.n).astype(np.int64)
    net._fill(_seed(rng), order, True)
    return net


def shuffle_neighbors(network: Network, policy: str, rng: np.random.Generator) -> ShuffleReport:
    """Re-sample every bucket of the peers selected by ``policy``, in place."""
    if policy not in ("originators", "all"):
        if policy == "none":
            return ShuffleReport()
        raise ValueError(f"unknown shuffle policy {policy!r}")
    if policy == "originators":
        peers = rng.permutation(network.originators()).astype(np.int64)
    else:
        peers = rng.permutation(network.n).astype(np.int64)
    if len(peers) == 0:
        return ShuffleReport()
    net = network
    net.free_top, dropped, created = _shuffle(
        _seed(rng), peers, net.kvec, net.slot_cap, net.sorted_idx, net.sorted_addr, net.addresses, net.bits,
        net.slot_start, net.count, net.nbr, net.eid, net.edge_lo, net.edge_hi, net.edge_level, net.edge_alive,
        net.free_edges, net.free_top, net.is_originator)
    # ids may be created, dropped and recycled within one round: keep the survivors
    alive = np.unique(created)
    alive = alive[net.edge_alive[alive]]
    made = np.stack([net.edge_lo[alive], net.edge_hi[alive], alive], axis=1)
    return ShuffleReport(dropped=dropped, created=made)

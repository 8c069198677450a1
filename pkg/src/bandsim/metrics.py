"""Counters collected during a run and the measurements derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LAYERS = ("accounting", "settlement")
POPULATIONS = ("all", "nonOriginators")


def gini(values) -> float:
    """Mean absolute difference over twice the mean, for non-negative values.

    Evaluated through the sorted closed form, which equals the pair sum
    ``sum |m_i - m_j| / (2 n sum m)``.  All-zero input is treated as a
    perfectly even distribution and returns 0.
    """
    m = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = m.size
    if n == 0:
        raise ValueError("gini of an empty population")
    if np.any(m < 0):
        raise ValueError("gini expects non-negative values")
    total = m.sum()
    if total == 0:
        return 0.0
    ranks = np.arange(1, n + 1, dtype=np.float64)
    return float(np.dot(2 * ranks - n - 1, m) / (n * total))


@dataclass
class MetricsLedger:
    """Per-peer and per-run counters shared by both engine backends.

    Hop index 0 is the originator, hop ``i`` the ``i``-th peer after it.
    """

    n: int
    hops: int
    seconds: int
    credits_in: np.ndarray = None
    credits_out: np.ndarray = None
    credits_out_originator: np.ndarray = None
    tokens_in: np.ndarray = None
    tokens_out: np.ndarray = None
    tokens_out_originator: np.ndarray = None
    hop_actions: np.ndarray = None
    hop_reward: np.ndarray = None
    forward_count: np.ndarray = None
    forward_reward: np.ndarray = None
    paid_forwards: np.ndarray = None
    total_forwards: np.ndarray = None
    requested: np.ndarray = None
    downloaded: np.ndarray = None
    # route outcome counters, see COUNTERS
    counters: np.ndarray = None
    cache_stats: np.ndarray | None = None
    series: dict = field(default_factory=dict)

    def __post_init__(self):
        n, h, t = self.n, self.hops, max(self.seconds, 1)
        for name in ("credits_in", "credits_out", "credits_out_originator", "tokens_in", "tokens_out",
                     "tokens_out_originator", "forward_count", "forward_reward", "requested", "downloaded"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(n, dtype=np.int64))
        if self.hop_actions is None:
            self.hop_actions = np.zeros((n, h), dtype=np.int64)
        if self.hop_reward is None:
            self.hop_reward = np.zeros(h, dtype=np.int64)
        if self.paid_forwards is None:
            self.paid_forwards = np.zeros((h, t), dtype=np.int64)
        if self.total_forwards is None:
            self.total_forwards = np.zeros((h, t), dtype=np.int64)
        if self.counters is None:
            self.counters = np.zeros(len(COUNTERS), dtype=np.int64)

    def count(self, name: str) -> int:
        return int(self.counters[COUNTER_INDEX[name]])

    def credit_income(self) -> np.ndarray:
        return self.credits_in - (self.credits_out - self.credits_out_originator)

    def token_income(self) -> np.ndarray:
        return self.tokens_in - (self.tokens_out - self.tokens_out_originator)

    def income(self, layer: str) -> np.ndarray:
        if layer == "accounting":
            return self.credit_income()
        if layer == "settlement":
            return self.token_income()
        raise ValueError(f"layer must be one of {LAYERS}")


COUNTERS = (
    "routes",              # requests that reached a terminal state (not counting waits)
    "completed",           # chunk delivered through the network or a cache
    "stored",              # ended at a peer inside the storage depth
    "closest",             # ended at the closest reachable peer outside the storage depth
    "cached",              # served from a forwarder's cache
    "originator_cache",    # served from the originator's own cache
    "given_up",
    "waits",               # blocked attempts deferred to the next second
    "path_edges",          # sum of path lengths over network deliveries
    "network_routes",      # deliveries that went through at least the originator
    "internal_hops",       # hops between two originators
    "total_hops",
    "settlements",
    "first_hop_credit",    # credits issued by originators on their first hop
)
COUNTER_INDEX = {name: i for i, name in enumerate(COUNTERS)}


def population_mask(is_originator: np.ndarray, population: str) -> np.ndarray:
    if population == "all":
        return np.ones(len(is_originator), dtype=np.bool_)
    if population == "nonOriginators":
        return ~np.asarray(is_originator, dtype=np.bool_)
    raise ValueError(f"population must be one of {POPULATIONS}")


def income_fairness(ledger: MetricsLedger, layer: str, is_originator, population: str = "all",
                    clamp: bool = False) -> float:
    """Gini over the absolute income (or income clamped at zero) of a population."""
    mask = population_mask(is_originator, population)
    if not mask.any():
        raise ValueError("empty population")
    net = ledger.income(layer)[mask]
    values = np.maximum(net, 0) if clamp else np.abs(net)
    return gini(values)


def hop_reward_fractions(ledger: MetricsLedger) -> np.ndarray:
    """Share of all rewards earned at each hop index 1..hops-1."""
    rewards = ledger.hop_reward[1:].astype(np.float64)
    total = rewards.sum()
    return rewards / total if total else rewards


def average_hop(ledger: MetricsLedger) -> np.ndarray:
    """Action-weighted mean hop index per peer; NaN for peers never on a path past hop 0."""
    acts = ledger.hop_actions[:, 1:].astype(np.float64)
    total = acts.sum(axis=1)
    idx = np.arange(1, ledger.hops, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, acts @ idx / np.where(total > 0, total, 1), np.nan)


def even_share_by_hop(ledger: MetricsLedger, income: np.ndarray, groups: int = 10) -> list[tuple[float, float]]:
    """(mean average hop, income ratio of even share) per group of peers ranked by average hop.

    A ratio of 2 means the group's peers earned twice ``total / n`` each on
    average.  Peers that never acted are left out of the groups.
    """
    avg = average_hop(ledger)
    active = np.flatnonzero(~np.isnan(avg))
    even = income.sum() / ledger.n
    if len(active) == 0 or even == 0:
        return []
    order = active[np.argsort(avg[active], kind="stable")]
    out = []
    for part in np.array_split(order, groups):
        if len(part):
            out.append((float(avg[part].mean()), float(income[part].mean() / even)))
    return out


def even_share_by_neighborhood(income: np.ndarray, sizes_per_peer: np.ndarray) -> list[tuple[int, float]]:
    """(neighbourhood size, mean income ratio of even share) for each size present."""
    even = income.sum() / len(income)
    if even == 0:
        return []
    out = []
    for size in np.unique(sizes_per_peer):
        sel = sizes_per_peer == size
        out.append((int(size), float(income[sel].mean() / even)))
    return out


def top_decile_share(income: np.ndarray, avg_hop: np.ndarray) -> float:
    """Income share of the 10% of peers with the lowest average hop."""
    active = np.flatnonzero(~np.isnan(avg_hop))
    if len(active) == 0 or income.sum() == 0:
        return 0.0
    order = active[np.argsort(avg_hop[active], kind="stable")]
    top = order[: max(1, len(income) // 10)]
    return float(income[top].sum() / income.sum())


def paid_forward_heatmap(ledger: MetricsLedger) -> np.ndarray:
    """Fraction of forwards settled with tokens, per (hop, second)."""
    total = ledger.total_forwards
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, ledger.paid_forwards / np.where(total > 0, total, 1), 0.0)


def clique_stats(ledger: MetricsLedger, members) -> tuple[float, float]:
    """(net tokens paid per delivered chunk by members, fraction of hops between originators).

    Net cost subtracts what members earn while forwarding, so a clique that
    routes through itself pays less per chunk.
    """
    members = np.asarray(members)
    chunks = ledger.downloaded[members].sum()
    tokens = ledger.tokens_out[members].sum() - ledger.tokens_in[members].sum()
    per_chunk = float(tokens / chunks) if chunks else 0.0
    hops = ledger.count("total_hops")
    internal = ledger.count("internal_hops") / hops if hops else 0.0
    return per_chunk, float(internal)


def effective_download_rate(ledger: MetricsLedger, originators, duration: int, chunk_size: int = 4096) -> float:
    """Delivered kB per second per originator."""
    originators = np.asarray(originators)
    if duration <= 0 or len(originators) == 0:
        return 0.0
    chunks = ledger.downloaded[originators].sum()
    return float(chunks * (chunk_size / 1024) / (len(originators) * duration))


def success_ratio(ledger: MetricsLedger, originators) -> float:
    originators = np.asarray(originators)
    req = ledger.requested[originators].sum()
    return float(ledger.downloaded[originators].sum() / req) if req else 1.0


def mean_forward_reward_and_path_length(ledger: MetricsLedger) -> tuple[float, float]:
    fwd = ledger.forward_count.sum()
    routes = ledger.count("network_routes")
    reward = float(ledger.forward_reward.sum() / fwd) if fwd else 0.0
    length = float(ledger.count("path_edges") / routes) if routes else 0.0
    return reward, length


def merge_mean(values) -> float:
    vals = [v for v in values if v is not None and not np.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")

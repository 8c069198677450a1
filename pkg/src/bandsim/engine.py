"""Second-by-second simulation driver.

Each simulated second runs three phases: shuffle the neighbour tables
(when a shuffle policy is set), route the requests released in that second
round-robin across originators, and snapshot the income fairness.  Debt
forgiveness is applied lazily whenever a connection is touched, which is
equivalent to forgiving every connection at the start of each second.

Two backends produce identical results.  ``reference`` walks requests with
``routing.route_request`` and supports caches and route logs; ``fast`` runs
the compiled loop in ``kernel.py``.  ``auto`` picks ``fast`` whenever the
configuration allows it.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .accounting import AccountingConfig, PairwiseBalance
from .cache import make_cache
from .config import ExperimentConfig
from .metrics import MetricsLedger, income_fairness
from .routing import RouteOutcome, RoutingPolicy, Terminal, external_clique_select, route_request
from .settlement import PaymentModel, negative_income_stats
from .topology import Network, generate_network, shuffle_neighbors
from .workload import RequestSchedule, ingest_trace, schedule_requests, schedule_uniform, trace_requests, zipf_stream

log = logging.getLogger(__name__)

SERIES = ("accounting_all", "settlement_all", "settlement_nonOriginators", "negative_income_fraction",
          "negative_income_sum", "completed", "given_up", "waits", "settlements", "discarded_debt")


class SimulationState:
    """Network, balances, caches and ledger of one running graph.

    Balances of the reference backend are created on first use and keyed by
    the ordered peer pair.
    """

    def __init__(self, network: Network, accounting: AccountingConfig, policy: RoutingPolicy, ledger: MetricsLedger,
                 caches: list | None = None):
        self.network = network
        self.accounting = accounting
        self.policy = policy
        self.ledger = ledger
        self.caches = caches
        self.balances: dict[tuple[int, int], PairwiseBalance] = {}

    def balance(self, p: int, q: int, now: int) -> PairwiseBalance:
        key = (p, q) if p < q else (q, p)
        bal = self.balances.get(key)
        if bal is None:
            thr, rate = self.accounting.limits(self.network.common_bits(p, q))
            bal = PairwiseBalance(key[0], key[1], thr, rate, last_refresh=now,
                                  reciprocity=self.accounting.reciprocity)
            self.balances[key] = bal
        else:
            bal.forgive(now)
        return bal

    def drop(self, p: int, q: int, now: int) -> int:
        """Forget the connection; returns the outstanding debt that was discarded."""
        bal = self.balances.pop((p, q) if p < q else (q, p), None)
        if bal is None:
            return 0
        bal.forgive(now)
        return abs(bal.balance) if bal.reciprocity else bal.debt_low + bal.debt_high


@dataclass
class GraphResult:
    """Everything measured on one generated graph."""

    index: int
    seed: int
    network: Network
    ledger: MetricsLedger
    backend: str
    discarded_debt: int = 0
    routes: list[RouteOutcome] | None = None
    elapsed: float = 0.0
    # rows of BALANCE_COLUMNS, forgiven up to the end of the run; only with ``state_dump``
    balances: np.ndarray | None = None

    def fairness(self, layer: str, population: str = "all", clamp: bool = False) -> float:
        return income_fairness(self.ledger, layer, self.network.is_originator, population, clamp)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    graphs: list[GraphResult] = field(default_factory=list)

    def fairness(self, layer: str, population: str = "all") -> float:
        """Mean over graphs."""
        clamp = self.config.fairness_clamp
        return float(np.mean([g.fairness(layer, population, clamp) for g in self.graphs]))

    def counter(self, name: str) -> int:
        return sum(g.ledger.count(name) for g in self.graphs)


# ---------------------------------------------------------------------------
# setup


def choose_backend(cfg: ExperimentConfig) -> str:
    if cfg.backend == "reference" or cfg.caching or cfg.route_log:
        if cfg.backend == "fast":
            raise ValueError("the fast backend supports neither caches nor route logs")
        return "reference"
    return "fast"


_TRACE_ROWS: dict[tuple, list] = {}


def build_schedule(cfg: ExperimentConfig, network: Network, rng: np.random.Generator) -> RequestSchedule:
    originators = network.originators()
    rate, duration, bits = cfg.rate_per_originator, cfg.duration_seconds, cfg.address_bits
    if cfg.workload == "uniform":
        return schedule_uniform(rng, originators, rate, duration, bits)
    if cfg.workload == "zipf":
        stream = zipf_stream(rng, cfg.zipf_catalog_size, cfg.zipf_exponent, bits, cfg.zipf_mean_chunks)
        return schedule_requests(stream, originators, rate, duration)
    key = (cfg.trace_path, cfg.trace_cid_column, cfg.trace_bytes_column)
    if key not in _TRACE_ROWS:
        _TRACE_ROWS[key] = ingest_trace(*key)
    return schedule_requests(trace_requests(_TRACE_ROWS[key], bits), originators, rate, duration)


def make_caches(cfg: ExperimentConfig, network: Network) -> list | None:
    if not cfg.caching:
        return None
    orig_policy = cfg.originator_cache_policy or cfg.cache_policy
    orig_size = cfg.cache_size if cfg.originator_cache_size is None else cfg.originator_cache_size
    caches = []
    for p in range(network.n):
        if network.is_originator[p]:
            caches.append(make_cache(orig_policy, orig_size) if orig_size > 0 else None)
        else:
            caches.append(make_cache(cfg.cache_policy, cfg.cache_size) if cfg.cache_size > 0 else None)
    return caches


def _limit_table(acct: AccountingConfig, bits: int) -> np.ndarray:
    return np.array([acct.limits(level) for level in range(bits)], dtype=np.int64).reshape(bits, 2)


BALANCE_COLUMNS = ("lowId", "highId", "bucketIdx", "balance", "debtLow", "debtHigh", "threshold", "refreshRate")


def _forgiven(value: np.ndarray, allow: np.ndarray) -> np.ndarray:
    return np.sign(value) * np.maximum(np.abs(value) - allow, 0)


class _EdgeArrays:
    """Per-connection balances for the fast backend, one row per edge id."""

    def __init__(self, network: Network, acct: AccountingConfig):
        self.network = network
        self.table = _limit_table(acct, network.bits)
        self.state = np.zeros((network.max_edges, kernel.EDGE_COLUMNS), dtype=np.int64)
        self.recip = acct.reciprocity
        alive = np.flatnonzero(network.edge_alive)
        self.reset(alive, 0)

    def reset(self, ids: np.ndarray, now: int) -> None:
        st = self.state
        levels = self.network.edge_level[ids]
        st[ids, kernel.BAL] = 0
        st[ids, kernel.DLO] = 0
        st[ids, kernel.DHI] = 0
        st[ids, kernel.THR] = self.table[levels, 0]
        st[ids, kernel.RATE] = self.table[levels, 1]
        st[ids, kernel.LAST] = now
        st[ids, kernel.LOW] = self.network.edge_lo[ids]

    def discard(self, ids: np.ndarray, now: int) -> np.ndarray:
        """Outstanding debt on ``ids`` after forgiveness up to ``now``."""
        st = self.state
        allow = (now - st[ids, kernel.LAST]) * st[ids, kernel.RATE]
        if self.recip:
            return np.maximum(np.abs(st[ids, kernel.BAL]) - allow, 0)
        return np.maximum(st[ids, kernel.DLO] - allow, 0) + np.maximum(st[ids, kernel.DHI] - allow, 0)

    def snapshot(self, now: int) -> np.ndarray:
        net = self.network
        ids = np.flatnonzero(net.edge_alive)
        ids = ids[np.lexsort((net.edge_hi[ids], net.edge_lo[ids]))]
        st = self.state[ids]
        allow = (now - st[:, kernel.LAST]) * st[:, kernel.RATE]
        return np.column_stack([net.edge_lo[ids], net.edge_hi[ids], net.edge_level[ids],
                                _forgiven(st[:, kernel.BAL], allow), _forgiven(st[:, kernel.DLO], allow),
                                _forgiven(st[:, kernel.DHI], allow), st[:, kernel.THR],
                                st[:, kernel.RATE]]).astype(np.int64)


def _reference_snapshot(state: "SimulationState", table: np.ndarray, now: int) -> np.ndarray:
    net = state.network
    ids = np.flatnonzero(net.edge_alive)
    rows = []
    for lo, hi, level in sorted(zip(net.edge_lo[ids].tolist(), net.edge_hi[ids].tolist(), net.edge_level[ids].tolist())):
        bal = state.balances.get((lo, hi))
        if bal is None:
            rows.append((lo, hi, level, 0, 0, 0, table[level, 0], table[level, 1]))
            continue
        bal.forgive(now)
        rows.append((lo, hi, level, bal.balance, bal.debt_low, bal.debt_high, bal.threshold, bal.refresh_rate))
    return np.array(rows, dtype=np.int64).reshape(-1, len(BALANCE_COLUMNS))


def _kernel_params(cfg: ExperimentConfig, payment: PaymentModel) -> tuple:
    who = {"none": kernel.WHO_NONE, "originators": kernel.WHO_ORIGINATORS, "all": kernel.WHO_ALL}
    return (int(cfg.omega), int(cfg.unit_reward), bool(cfg.credit_model == "constant"), bool(cfg.debt_limits),
            bool(cfg.reciprocity), bool(cfg.next_hop_rule == "greedyFree"), int(who[payment.who_settles]),
            bool(payment.blocked_action == "wait"), bool(payment.settle_amount == "full"), int(cfg.storage_depth),
            int(cfg.address_bits))


def _ledger_tuple(ledger: MetricsLedger) -> tuple:
    return (ledger.credits_in, ledger.credits_out, ledger.credits_out_originator, ledger.tokens_in, ledger.tokens_out,
            ledger.tokens_out_originator, ledger.hop_actions, ledger.hop_reward, ledger.forward_count,
            ledger.forward_reward, ledger.paid_forwards, ledger.total_forwards, ledger.requested, ledger.downloaded,
            ledger.counters)


# ---------------------------------------------------------------------------
# per-graph run


def _snapshot(ledger: MetricsLedger, network: Network, clamp: bool, discarded: int) -> None:
    s = ledger.series
    s.setdefault("accounting_all", []).append(income_fairness(ledger, "accounting", network.is_originator, "all", clamp))
    s.setdefault("settlement_all", []).append(income_fairness(ledger, "settlement", network.is_originator, "all", clamp))
    if (~network.is_originator).any():
        value = income_fairness(ledger, "settlement", network.is_originator, "nonOriginators", clamp)
    else:
        value = float("nan")
    s.setdefault("settlement_nonOriginators", []).append(value)
    frac, total = negative_income_stats(ledger.tokens_in, ledger.tokens_out, ledger.tokens_out_originator,
                                        ~network.is_originator)
    s.setdefault("negative_income_fraction", []).append(frac)
    s.setdefault("negative_income_sum", []).append(total)
    for name in ("completed", "given_up", "waits", "settlements"):
        s.setdefault(name, []).append(ledger.count(name))
    s.setdefault("discarded_debt", []).append(discarded)


def run_graph(cfg: ExperimentConfig, index: int = 0, network: Network | None = None) -> GraphResult:
    """Generate graph ``index`` (seed ``cfg.seed + index``) and simulate it."""
    started = time.perf_counter()
    seed = cfg.seed + index
    topo_rng, work_rng, shuffle_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    if network is None:
        network = generate_network(cfg.network(seed), topo_rng)
    backend = choose_backend(cfg)
    acct = cfg.accounting()
    payment = PaymentModel.parse(cfg.payment_model)
    schedule = build_schedule(cfg, network, work_rng)
    duration = cfg.duration_seconds
    ledger = MetricsLedger(network.n, network.bits + 1, duration)
    external = cfg.clique_mode == "external"
    members = network.originators()
    discarded_total = 0
    routes = [] if cfg.route_log else None

    if backend == "fast":
        edges = _EdgeArrays(network, acct)
        params = _kernel_params(cfg, payment)
        queue, lengths = schedule.as_matrix()
        head = np.zeros(len(lengths), dtype=np.int64)
        ledger_arrays = _ledger_tuple(ledger)
        max_bucket = int(network.slot_cap.max()) if network.slot_cap.size else 1
    else:
        state = SimulationState(network, acct, RoutingPolicy(cfg.next_hop_rule, payment, cfg.caching), ledger,
                                make_caches(cfg, network))
        queues = schedule.queues
        head = np.zeros(len(queues), dtype=np.int64)

    for now in range(duration):
        discarded = 0
        if cfg.shuffle_policy != "none":
            report = shuffle_neighbors(network, cfg.shuffle_policy, shuffle_rng)
            if backend == "fast":
                report.balances = edges.discard(report.dropped[:, 2], now)
                edges.reset(report.created[:, 2], now)
            else:
                report.balances = np.array([state.drop(int(lo), int(hi), now) for lo, hi, _ in report.dropped],
                                           dtype=np.int64)
                for lo, hi, _ in report.created:
                    state.balances.pop((int(lo), int(hi)), None)
            discarded = int(report.balances.sum())
            discarded_total += discarded
        col = min(now, duration - 1)
        if backend == "fast":
            net_arrays = (network.addresses, network.is_originator, network.slot_start, network.count, network.nbr,
                          network.eid)
            kernel.run_second(now, col, queue, lengths, head, schedule.originators, schedule.rate, external, members,
                              params, net_arrays, edges.state, ledger_arrays, max_bucket)
        else:
            _reference_second(state, schedule, queues, head, now, external, members, routes)
        _snapshot(ledger, network, cfg.fairness_clamp, discarded)

    if backend == "reference" and state.caches is not None:
        stats = np.zeros((network.n, 4), dtype=np.int64)
        for p, cache in enumerate(state.caches):
            if cache is not None:
                c = cache.counters
                stats[p] = (c.hits, c.misses, c.insertions, c.evictions)
        ledger.cache_stats = stats
    balances = None
    if cfg.state_dump:
        if backend == "fast":
            balances = edges.snapshot(duration)
        else:
            balances = _reference_snapshot(state, _limit_table(acct, network.bits), duration)
    # the working layout reserves shuffle headroom; results keep only live entries
    return GraphResult(index, seed, network.packed(), ledger, backend, discarded_total, routes,
                       time.perf_counter() - started, balances)


def _reference_second(state: SimulationState, schedule: RequestSchedule, queues, head, now, external, members,
                      routes) -> None:
    m = len(queues)
    limit = [min(len(q), schedule.rate * (now + 1)) for q in queues]
    stalled = [False] * m
    progressed = True
    while progressed:
        progressed = False
        for o in range(m):
            if stalled[o] or head[o] >= limit[o]:
                continue
            progressed = True
            chunk = int(queues[o][head[o]])
            orig = external_clique_select(state.network, members, chunk) if external else int(schedule.originators[o])
            outcome = route_request(state, orig, chunk, now)
            if routes is not None:
                routes.append(outcome)
            if outcome.terminal is Terminal.WAITED:
                stalled[o] = True
            else:
                head[o] += 1


# ---------------------------------------------------------------------------
# experiments


def _run_one(args) -> GraphResult:
    cfg, index = args
    return run_graph(cfg, index)


def run_experiment(cfg: ExperimentConfig, parallel: int = 1) -> ExperimentResult:
    """Simulate ``cfg.graph_count`` graphs, optionally in worker processes.

    Results do not depend on ``parallel``: every graph draws from its own
    seed and graphs are returned in index order.
    """
    cfg.validate()
    jobs = [(cfg, i) for i in range(cfg.graph_count)]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(parallel, len(jobs))) as pool:
            graphs = list(pool.map(_run_one, jobs))
    else:
        graphs = [_run_one(j) for j in jobs]
    for g in graphs:
        log.info("graph %d (seed %d, %s backend): %.1fs", g.index, g.seed, g.backend, g.elapsed)
    return ExperimentResult(cfg, graphs)

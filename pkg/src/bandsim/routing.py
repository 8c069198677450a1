"""Forwarding Kademlia routes over the peer graph.

Every hop moves the request to a neighbour strictly closer to the chunk,
so routes converge in at most ``bits`` hops.  At peer ``p`` the closer
neighbours are exactly the entries of bucket ``commonBits(p, chunk)``.

This is the readable reference implementation used by the reference engine
and by the tests; ``kernel.py`` carries a compiled copy of the same rules.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .accounting import constant_credits, distance_credit
from .metrics import COUNTER_INDEX as _IDX
from .settlement import Action, PaymentModel, required_settlement, settle

NEXT_HOP_RULES = ("strictKademlia", "greedyFree")


class Terminal(str, enum.Enum):
    STORED = "stored"
    CLOSEST = "closest"
    CACHED = "cached"
    ORIGINATOR_CACHE = "originatorCacheHit"
    WAITED = "waited"
    GIVEN_UP = "givenUp"

    @property
    def delivered(self) -> bool:
        return self not in (Terminal.WAITED, Terminal.GIVEN_UP)


@dataclass(frozen=True)
class RoutingPolicy:
    next_hop_rule: str = "strictKademlia"
    payment: PaymentModel = field(default_factory=PaymentModel)
    cache_enabled: bool = False

    def __post_init__(self):
        if self.next_hop_rule not in NEXT_HOP_RULES:
            raise ValueError(f"next_hop_rule must be one of {NEXT_HOP_RULES}")


@dataclass
class RouteOutcome:
    chunk: int
    path: list[int]
    credits: list[int]
    settled: list[int]
    terminal: Terminal
    epoch: int

    @property
    def originator(self) -> int:
        return self.path[0]

    @property
    def length(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class Forward:
    peer: int
    credit: int
    tokens: int = 0


@dataclass(frozen=True)
class Blocked:
    best: int
    credit: int


@dataclass(frozen=True)
class CurrentIsClosest:
    pass


def stores_chunk(common: int, depth: int) -> bool:
    """A peer sharing at least ``depth`` prefix bits with a chunk is responsible for it."""
    return common >= depth


def _common(net, p: int, chunk: int) -> int:
    return net.bits - (int(net.addresses[p]) ^ chunk).bit_length()


def candidates(net, peer: int, chunk: int) -> list[int]:
    """Strictly closer neighbours, closest first (by XOR distance, then id)."""
    level = _common(net, peer, chunk)
    if level >= net.bits:
        return []
    entries = [int(q) for q in net.bucket(peer, level)]
    entries.sort(key=lambda q: (int(net.addresses[q]) ^ chunk, q))
    return entries


def next_hop(state, current: int, chunk: int, now: int):
    """Choose where ``current`` sends the request, consulting its balances.

    Returns ``Forward``, ``Blocked`` (no candidate admits free passage) or
    ``CurrentIsClosest`` (no closer neighbour exists).
    """
    net, acct = state.network, state.accounting
    cands = candidates(net, current, chunk)
    if not cands:
        return CurrentIsClosest()
    omega = acct.omega
    if not acct.debt_limits:
        q = cands[0]
        return Forward(q, distance_credit(_common(net, q, chunk), omega))
    scored = []
    for rank, q in enumerate(cands):
        credit = distance_credit(_common(net, q, chunk), omega)
        bal = state.balance(current, q, now)
        scored.append((rank, q, credit, bal.headroom(current) - credit))
    if state.policy.next_hop_rule == "greedyFree":
        scored.sort(key=lambda s: (-s[3], s[0]))
    for _, q, credit, spare in scored:
        if spare >= 0:
            return Forward(q, credit)
    best = cands[0]
    return Blocked(best, distance_credit(_common(net, best, chunk), omega))


def route_request(state, originator: int, chunk: int, now: int) -> RouteOutcome:
    """Route one request, then commit credits, settlements and cache fills.

    Nothing is charged for a request that ends waiting or given up; every
    connection on a path is distinct, so deciding the whole path before
    charging gives the same balances as charging hop by hop.
    """
    net, policy, ledger = state.network, state.policy, state.ledger
    caches = state.caches if policy.cache_enabled else None
    if caches is not None and caches[originator] is not None and caches[originator].lookup(chunk):
        outcome = RouteOutcome(chunk, [originator], [], [], Terminal.ORIGINATOR_CACHE, now)
        _deliver(state, outcome)
        return outcome
    path, credits, settled = [originator], [], []
    cur = originator
    terminal = None
    while terminal is None:
        common = _common(net, cur, chunk)
        if stores_chunk(common, net.depth):
            terminal = Terminal.STORED
            break
        if caches is not None and cur != originator and caches[cur] is not None and caches[cur].lookup(chunk):
            terminal = Terminal.CACHED
            break
        step = next_hop(state, cur, chunk, now)
        if isinstance(step, CurrentIsClosest):
            terminal = Terminal.CLOSEST
            break
        if isinstance(step, Blocked):
            action = policy.payment.resolve_blocked(cur == originator)
            if action is Action.WAIT:
                ledger.counters[_IDX["waits"]] += 1
                return RouteOutcome(chunk, path, credits, settled, Terminal.WAITED, now)
            if action is Action.GIVE_UP:
                ledger.counters[_IDX["given_up"]] += 1
                ledger.counters[_IDX["routes"]] += 1
                ledger.requested[originator] += 1
                return RouteOutcome(chunk, path, credits, settled, Terminal.GIVEN_UP, now)
            bal = state.balance(cur, step.best, now)
            tokens = required_settlement(bal.debt(cur), step.credit, bal.threshold, policy.payment.settle_amount)
            step = Forward(step.best, step.credit, tokens)
        path.append(step.peer)
        credits.append(step.credit)
        settled.append(step.tokens)
        cur = step.peer
    if state.accounting.credit_model == "constant":
        credits = constant_credits(len(path) - 1, state.accounting.unit_reward)
    outcome = RouteOutcome(chunk, path, credits, settled, terminal, now)
    _commit(state, outcome, now)
    return outcome


def _deliver(state, outcome: RouteOutcome) -> None:
    ledger = state.ledger
    orig = outcome.originator
    c = ledger.counters
    c[_IDX["routes"]] += 1
    c[_IDX["completed"]] += 1
    ledger.requested[orig] += 1
    ledger.downloaded[orig] += 1
    if outcome.terminal is Terminal.ORIGINATOR_CACHE:
        c[_IDX["originator_cache"]] += 1


def _commit(state, outcome: RouteOutcome, now: int) -> None:
    net, ledger, acct = state.network, state.ledger, state.accounting
    path, credits, settled = outcome.path, outcome.credits, outcome.settled
    orig = path[0]
    length = len(path) - 1
    _deliver(state, outcome)
    c = ledger.counters
    c[_IDX["network_routes"]] += 1
    c[_IDX["path_edges"]] += length
    c[_IDX[{Terminal.STORED: "stored", Terminal.CLOSEST: "closest", Terminal.CACHED: "cached"}[outcome.terminal]]] += 1
    col = min(now, ledger.seconds - 1)
    for i in range(1, length + 1):
        payer, payee = path[i - 1], path[i]
        credit, tokens = credits[i - 1], settled[i - 1]
        if acct.debt_limits:
            bal = state.balance(payer, payee, now)
            if tokens:
                bal.pay(payer, tokens)
                settle(ledger, payer, payee, tokens, originator_download=(i == 1))
                ledger.paid_forwards[i, col] += 1
                c[_IDX["settlements"]] += 1
            bal.charge(payer, credit)
        ledger.credits_out[payer] += credit
        ledger.credits_in[payee] += credit
        if i == 1:
            ledger.credits_out_originator[payer] += credit
            c[_IDX["first_hop_credit"]] += credit
        ledger.total_forwards[i, col] += 1
        ledger.hop_actions[payee, i] += 1
        reward = credit - (credits[i] if i < length else 0)
        if reward < 0:
            raise AssertionError("credit grew along the route")
        ledger.hop_reward[i] += reward
        if i < length:
            ledger.forward_count[payee] += 1
            ledger.forward_reward[payee] += reward
        c[_IDX["total_hops"]] += 1
        if net.is_originator[payer] and net.is_originator[payee]:
            c[_IDX["internal_hops"]] += 1
    if length:
        ledger.hop_actions[orig, 0] += 1
    if state.policy.cache_enabled and state.caches is not None:
        for p in path[:length]:
            cache = state.caches[p]
            if cache is not None:
                cache.insert(outcome.chunk)


def external_clique_select(net, members, chunk: int) -> int:
    """Member closest to ``chunk``: longest common prefix, then XOR distance, then id."""
    members = [int(m) for m in members]
    if not members:
        raise ValueError("clique has no members")
    return min(members, key=lambda m: (int(net.addresses[m]) ^ chunk, m))

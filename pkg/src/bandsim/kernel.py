"""Compiled request loop.

A line-for-line port of ``routing.route_request`` onto flat arrays, used by
the fast engine backend.  Connection state lives in one row per edge id
(see the column constants below); ledgers are the arrays of a ``MetricsLedger``.  Caches are not
supported here; the engine falls back to the reference backend for them.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .metrics import COUNTER_INDEX
from .topology import _bit_length, common_prefix

WHO_NONE, WHO_ORIGINATORS, WHO_ALL = 0, 1, 2

C_ROUTES = COUNTER_INDEX["routes"]
C_COMPLETED = COUNTER_INDEX["completed"]
C_STORED = COUNTER_INDEX["stored"]
C_CLOSEST = COUNTER_INDEX["closest"]
C_GIVEN_UP = COUNTER_INDEX["given_up"]
C_WAITS = COUNTER_INDEX["waits"]
C_PATH_EDGES = COUNTER_INDEX["path_edges"]
C_NETWORK_ROUTES = COUNTER_INDEX["network_routes"]
C_INTERNAL = COUNTER_INDEX["internal_hops"]
C_TOTAL_HOPS = COUNTER_INDEX["total_hops"]
C_SETTLEMENTS = COUNTER_INDEX["settlements"]
C_FIRST_HOP = COUNTER_INDEX["first_hop_credit"]

# route results
DELIVERED, WAITED, GAVE_UP = 0, 1, 2


# columns of the packed per-connection state, one 64-byte row per edge id
BAL, DLO, DHI, THR, RATE, LAST, LOW = 0, 1, 2, 3, 4, 5, 6
EDGE_COLUMNS = 8


@nb.njit(cache=True, inline="always")
def _forgive(e, now, recip, st):
    allow = (now - st[e, LAST]) * st[e, RATE]
    st[e, LAST] = now
    if allow > 0:
        if recip:
            b = st[e, BAL]
            if b > 0:
                st[e, BAL] = b - min(b, allow)
            elif b < 0:
                st[e, BAL] = b + min(-b, allow)
        else:
            st[e, DLO] -= min(st[e, DLO], allow)
            st[e, DHI] -= min(st[e, DHI], allow)


@nb.njit(cache=True, inline="always")
def _debt(e, p, recip, st):
    if recip:
        return st[e, BAL] if p == st[e, LOW] else -st[e, BAL]
    return st[e, DLO] if p == st[e, LOW] else st[e, DHI]


@nb.njit(cache=True, inline="always")
def _add(e, p, amount, recip, st):
    if recip:
        if p == st[e, LOW]:
            st[e, BAL] += amount
        else:
            st[e, BAL] -= amount
    elif p == st[e, LOW]:
        st[e, DLO] += amount
    else:
        st[e, DHI] += amount


@nb.njit(cache=True, inline="always")
def _credit(common, omega):
    return max(0, omega - common) + 1


@nb.njit(cache=True)
def route(orig, chunk, now, col, p, net, st, ledger, scratch):
    """Route one request; returns DELIVERED, WAITED or GAVE_UP."""
    (omega, unit, constant, limits, recip, greedy, who, wait, full, depth, bits) = p
    addresses, is_orig, slot_start, count, nbr, eid = net
    (credits_in, credits_out, credits_out_orig, tokens_in, tokens_out, tokens_out_orig, hop_actions, hop_reward,
     forward_count, forward_reward, paid, total_fwd, requested, downloaded, counters) = ledger
    path, hop_credit, hop_tokens, hop_edge, cand, cand_e, key, spare = scratch

    path[0] = orig
    length = 0
    cur = orig
    stored = False
    chunk = np.uint64(chunk)
    while True:
        common = common_prefix(addresses[cur], chunk, bits)
        if common >= depth:
            stored = True
            break
        base = slot_start[cur, common]
        m = count[cur, common]
        if m == 0:
            break
        # insertion sort candidates by XOR distance to the chunk
        for j in range(m):
            q = nbr[base + j]
            k = addresses[q] ^ chunk
            e = eid[base + j]
            i = j
            while i > 0 and key[i - 1] > k:
                key[i] = key[i - 1]
                cand[i] = cand[i - 1]
                cand_e[i] = cand_e[i - 1]
                i -= 1
            key[i] = k
            cand[i] = q
            cand_e[i] = e
        chosen = -1
        chosen_e = -1
        credit = 0
        tokens = 0
        if not limits:
            chosen = cand[0]
            chosen_e = cand_e[0]
            credit = _credit(common_prefix(addresses[chosen], chunk, bits), omega)
        elif not greedy:
            for j in range(m):
                e = cand_e[j]
                c = _credit(bits - _bit_length(key[j]), omega)
                _forgive(e, now, recip, st)
                if _debt(e, cur, recip, st) + c <= st[e, THR]:
                    chosen = cand[j]
                    chosen_e = e
                    credit = c
                    break
        else:
            best_spare = -1
            for j in range(m):
                e = cand_e[j]
                c = _credit(bits - _bit_length(key[j]), omega)
                _forgive(e, now, recip, st)
                s = st[e, THR] - _debt(e, cur, recip, st) - c
                if s >= 0 and s > best_spare:
                    best_spare = s
                    chosen = cand[j]
                    chosen_e = e
                    credit = c
        if chosen < 0:
            # blocked: settle with the closest candidate or stop
            if who == WHO_ALL or (who == WHO_ORIGINATORS and cur == orig):
                chosen = cand[0]
                chosen_e = cand_e[0]
                credit = _credit(common_prefix(addresses[chosen], chunk, bits), omega)
                debt = _debt(chosen_e, cur, recip, st)
                if full:
                    tokens = max(debt, 0) + credit
                else:
                    tokens = debt + credit - st[chosen_e, THR]
            elif wait:
                counters[C_WAITS] += 1
                return WAITED
            else:
                counters[C_GIVEN_UP] += 1
                counters[C_ROUTES] += 1
                requested[orig] += 1
                return GAVE_UP
        length += 1
        path[length] = chosen
        hop_credit[length] = credit
        hop_tokens[length] = tokens
        hop_edge[length] = chosen_e
        cur = chosen

    if constant:
        for i in range(1, length + 1):
            hop_credit[i] = unit * (length - i + 1)

    counters[C_ROUTES] += 1
    counters[C_COMPLETED] += 1
    requested[orig] += 1
    downloaded[orig] += 1
    counters[C_NETWORK_ROUTES] += 1
    counters[C_PATH_EDGES] += length
    if stored:
        counters[C_STORED] += 1
    else:
        counters[C_CLOSEST] += 1
    for i in range(1, length + 1):
        payer = path[i - 1]
        payee = path[i]
        credit = hop_credit[i]
        if limits:
            e = hop_edge[i]
            t = hop_tokens[i]
            if t > 0:
                _add(e, payer, -t, recip, st)
                tokens_out[payer] += t
                tokens_in[payee] += t
                if i == 1:
                    tokens_out_orig[payer] += t
                paid[i, col] += 1
                counters[C_SETTLEMENTS] += 1
            _add(e, payer, credit, recip, st)
        credits_out[payer] += credit
        credits_in[payee] += credit
        if i == 1:
            credits_out_orig[payer] += credit
            counters[C_FIRST_HOP] += credit
        total_fwd[i, col] += 1
        hop_actions[payee, i] += 1
        nxt = hop_credit[i + 1] if i < length else 0
        reward = credit - nxt
        hop_reward[i] += reward
        if i < length:
            forward_count[payee] += 1
            forward_reward[payee] += reward
        counters[C_TOTAL_HOPS] += 1
        if is_orig[payer] and is_orig[payee]:
            counters[C_INTERNAL] += 1
    if length > 0:
        hop_actions[orig, 0] += 1
    return DELIVERED


@nb.njit(cache=True)
def _closest_member(members, addresses, chunk):
    best = members[0]
    best_d = addresses[best] ^ chunk
    for j in range(1, members.shape[0]):
        q = members[j]
        d = addresses[q] ^ chunk
        if d < best_d or (d == best_d and q < best):
            best = q
            best_d = d
    return best


@nb.njit(cache=True)
def run_second(now, col, queue, lengths, head, originators, rate, external, members, p, net, st, ledger,
               max_bucket):
    """Issue one second of requests, round-robin across originators.

    An originator whose request has to wait stops issuing for the rest of
    the second and retries the same chunk next second.
    """
    bits = p[10]
    scratch = (np.empty(bits + 2, np.int64), np.zeros(bits + 2, np.int64), np.zeros(bits + 2, np.int64),
               np.zeros(bits + 2, np.int64), np.empty(max_bucket, np.int64), np.empty(max_bucket, np.int64),
               np.empty(max_bucket, np.uint64), np.empty(max_bucket, np.int64))
    m = originators.shape[0]
    limit = np.minimum(lengths, rate * (now + 1))
    stalled = np.zeros(m, dtype=np.bool_)
    addresses = net[0]
    progressed = True
    while progressed:
        progressed = False
        for o in range(m):
            if stalled[o] or head[o] >= limit[o]:
                continue
            progressed = True
            chunk = queue[o, head[o]]
            orig = _closest_member(members, addresses, chunk) if external else originators[o]
            res = route(orig, chunk, now, col, p, net, st, ledger, scratch)
            if res == WAITED:
                stalled[o] = True
            else:
                head[o] += 1

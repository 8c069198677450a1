"""Token settlement policies and the token ledger.

A payment model answers three questions for a request that cannot pass a
connection for free: who is willing to settle, what an unwilling peer does
instead, and how many tokens a settlement transfers.  The six supported
combinations are named by three-letter codes:

    NG_  nobody settles, the request is given up
    NW_  nobody settles, the originator waits for forgiveness
    OGF  originators settle their full debt, others give up
    OWF  originators settle their full debt, others wait
    A_F  everybody settles the full debt
    A_C  everybody settles just enough for the current request
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

WHO_SETTLES = ("none", "originators", "all")
BLOCKED_ACTIONS = ("giveup", "wait")
SETTLE_AMOUNTS = ("current", "full")

_CODES = {
    "NG_": ("none", "giveup", "current"),
    "NW_": ("none", "wait", "current"),
    "OGF": ("originators", "giveup", "full"),
    "OWF": ("originators", "wait", "full"),
    "A_F": ("all", "giveup", "full"),
    "A_C": ("all", "giveup", "current"),
}
PAYMENT_MODELS = tuple(_CODES)


class Action(enum.IntEnum):
    SETTLE = 0
    WAIT = 1
    GIVE_UP = 2


@dataclass(frozen=True)
class PaymentModel:
    who_settles: str = "all"
    blocked_action: str = "giveup"
    settle_amount: str = "current"

    @classmethod
    def parse(cls, code: str) -> "PaymentModel":
        key = code.strip().upper()
        if key not in _CODES:
            raise ValueError(f"payment model must be one of {', '.join(PAYMENT_MODELS)}; got {code!r}")
        return cls(*_CODES[key])

    @property
    def code(self) -> str:
        for key, value in _CODES.items():
            if value == (self.who_settles, self.blocked_action, self.settle_amount):
                return key
        raise ValueError(f"not a supported combination: {self}")

    def resolve_blocked(self, originator_hop: bool) -> Action:
        """What happens when no candidate connection admits free passage."""
        if self.who_settles == "all" or (self.who_settles == "originators" and originator_hop):
            return Action.SETTLE
        return Action.WAIT if self.blocked_action == "wait" else Action.GIVE_UP


def required_settlement(debt: int, credit: int, threshold: int, amount: str = "current") -> int:
    """Tokens the debtor transfers before taking on ``credit`` more debt.

    ``current`` pays the minimum, leaving the debt exactly at the threshold
    after the charge; ``full`` clears the outstanding debt as well as the new
    charge, leaving the debt at zero.
    """
    if debt + credit <= threshold:
        raise ValueError("settlement is not required")
    if amount == "current":
        return debt + credit - threshold
    if amount == "full":
        return max(debt, 0) + credit
    raise ValueError(f"unknown settle amount {amount!r}")


def settle(ledger, payer: int, payee: int, tokens: int, originator_download: bool = False) -> None:
    """Record a token transfer on any ledger with ``tokens_in/out/out_originator`` arrays."""
    if tokens <= 0:
        raise ValueError("settlement must transfer a positive amount")
    ledger.tokens_out[payer] += tokens
    ledger.tokens_in[payee] += tokens
    if originator_download:
        ledger.tokens_out_originator[payer] += tokens


class TokenLedger:
    """Per-peer token flows.

    ``tokens_out`` includes the first-hop download payments of originators,
    which are also tracked separately in ``tokens_out_originator`` so they
    can be excluded from income.
    """

    def __init__(self, n: int):
        self.tokens_in = np.zeros(n, dtype=np.int64)
        self.tokens_out = np.zeros(n, dtype=np.int64)
        self.tokens_out_originator = np.zeros(n, dtype=np.int64)

    def settle(self, payer: int, payee: int, tokens: int, originator_download: bool = False) -> None:
        settle(self, payer, payee, tokens, originator_download)

    def net(self) -> np.ndarray:
        """Income per peer, leaving out originators' own download payments."""
        return self.tokens_in - (self.tokens_out - self.tokens_out_originator)


def negative_income_stats(tokens_in, tokens_out, tokens_out_originator, population) -> tuple[float, int]:
    """(fraction of ``population`` with negative income, sum of those incomes)."""
    idx = np.asarray(population)
    if idx.dtype == np.bool_:
        idx = np.flatnonzero(idx)
    if len(idx) == 0:
        return 0.0, 0
    net = (np.asarray(tokens_in) - (np.asarray(tokens_out) - np.asarray(tokens_out_originator)))[idx]
    neg = net < 0
    return float(neg.mean()), int(net[neg].sum())

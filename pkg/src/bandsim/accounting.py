"""Credit pricing and pairwise balances.

A request that travels from ``p_i`` to ``p_{i+1}`` credits ``p_{i+1}`` with
an amount of accounting units.  Under the distance model the amount only
depends on how close the receiving peer is to the chunk, so every hop keeps
the difference between what it is credited and what it credits onward.

Balances are kept per connection.  With reciprocity the two directions net
against each other in one signed value; without it each direction keeps its
own debt counter.  Debt above zero is forgiven at a per-second refresh rate
and may never exceed the connection's threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

CREDIT_MODELS = ("distance", "constant")
FREE_SERVICE_MODES = ("off", "constant", "pairwise")


def distance_credit(common: int, omega: int) -> int:
    """Units credited to a peer sharing ``common`` prefix bits with the chunk."""
    return max(0, omega - common) + 1


def constant_credits(path_length: int, unit: int = 1) -> list[int]:
    """Per-hop credits when every action earns ``unit``.

    Hop ``i`` (1-based) is paid for itself and every action behind it, so the
    credit entering it is ``unit * (path_length - i + 1)``.
    """
    return [unit * (path_length - i + 1) for i in range(1, path_length + 1)]


def forward_reward(c_in: int, c_out: int) -> int:
    if c_in < c_out or c_out < 0:
        raise AssertionError(f"credit must shrink along a route (in={c_in}, out={c_out})")
    return c_in - c_out


def adapted_threshold(bucket: int, omega: int) -> int:
    """Largest credit a connection in ``bucket`` can ever carry, at least 1."""
    return max(1, omega - bucket)


def adapted_refresh_rate(bucket: int, omega: int, base_rate: int | None = None) -> int:
    """Refresh rate scaled by the adapted threshold, halved outside bucket 0."""
    base = omega // 2 if base_rate is None else base_rate
    if bucket == 0:
        return base
    return max(1, (base * adapted_threshold(bucket, omega)) // (2 * omega))


def connection_limits(bucket: int, omega: int, free_service: str) -> tuple[int, int]:
    """(threshold, refresh rate) for a connection filed in ``bucket``."""
    if free_service == "pairwise":
        return adapted_threshold(bucket, omega), adapted_refresh_rate(bucket, omega)
    if free_service == "constant":
        return omega, omega // 2
    if free_service == "off":
        return omega, 0
    raise ValueError(f"unknown free service mode {free_service!r}")


@dataclass(frozen=True)
class AccountingConfig:
    """How requests are priced and how much debt connections tolerate.

    With ``debt_limits`` off only credits are recorded: no thresholds, no
    forgiveness, no settlements.  The constant credit model needs the whole
    path before pricing it, so it is only available in that mode.
    """

    credit_model: str = "distance"
    omega: int = 16
    unit_reward: int = 1
    reciprocity: bool = True
    free_service: str = "constant"
    debt_limits: bool = True

    def validate(self, storage_depth: int | None = None) -> list[str]:
        errors = []
        if self.credit_model not in CREDIT_MODELS:
            errors.append(f"credit_model must be one of {CREDIT_MODELS}")
        if self.free_service not in FREE_SERVICE_MODES:
            errors.append(f"free_service must be one of {FREE_SERVICE_MODES}")
        if self.omega < 1:
            errors.append("omega must be positive")
        if storage_depth is not None and self.omega < storage_depth:
            errors.append(f"omega >= storage depth required (omega={self.omega}, depth={storage_depth})")
        if self.unit_reward < 1:
            errors.append("unit_reward must be positive")
        if self.credit_model == "constant" and self.debt_limits:
            errors.append("the constant credit model requires debt_limits = false")
        if self.free_service == "pairwise" and self.credit_model != "distance":
            errors.append("pairwise free service requires the distance credit model")
        return errors

    def limits(self, bucket: int) -> tuple[int, int]:
        return connection_limits(bucket, self.omega, self.free_service)


@dataclass
class PairwiseBalance:
    """Accounting state of one connection between ``low`` < ``high``.

    With ``reciprocity`` the signed ``balance`` is positive when ``low`` owes
    ``high``.  Without it ``debt_low`` and ``debt_high`` count each side's
    debt separately and ``balance`` is unused.
    """

    low: int
    high: int
    threshold: int
    refresh_rate: int
    last_refresh: int = 0
    reciprocity: bool = True
    balance: int = 0
    debt_low: int = 0
    debt_high: int = 0

    def __post_init__(self):
        if self.low >= self.high:
            raise ValueError("endpoints must satisfy low < high")
        if self.threshold < 1 or self.refresh_rate < 0:
            raise ValueError("threshold must be positive and refresh rate non-negative")

    def _side(self, peer: int) -> bool:
        if peer == self.low:
            return True
        if peer == self.high:
            return False
        raise ValueError(f"peer {peer} is not an endpoint of ({self.low}, {self.high})")

    def debt(self, peer: int) -> int:
        """Units ``peer`` owes across this connection; negative when owed."""
        is_low = self._side(peer)
        if self.reciprocity:
            return self.balance if is_low else -self.balance
        return self.debt_low if is_low else self.debt_high

    def forgive(self, now: int) -> int:
        """Move debt toward zero for the time elapsed since the last refresh."""
        if now < self.last_refresh:
            raise ValueError("time went backwards")
        allowance = (now - self.last_refresh) * self.refresh_rate
        self.last_refresh = now
        if allowance == 0:
            return 0
        if self.reciprocity:
            amount = min(abs(self.balance), allowance)
            self.balance += -amount if self.balance > 0 else amount
            return amount
        a = min(self.debt_low, allowance)
        b = min(self.debt_high, allowance)
        self.debt_low -= a
        self.debt_high -= b
        return a + b

    def headroom(self, peer: int) -> int:
        return self.threshold - self.debt(peer)

    def can_send(self, peer: int, credit: int) -> bool:
        """Whether ``peer`` may take on ``credit`` more debt without settling."""
        if credit > self.threshold:
            raise AssertionError(f"credit {credit} exceeds threshold {self.threshold}")
        return self.debt(peer) + credit <= self.threshold

    def _add(self, peer: int, amount: int) -> None:
        is_low = self._side(peer)
        if self.reciprocity:
            self.balance += amount if is_low else -amount
        elif is_low:
            self.debt_low += amount
        else:
            self.debt_high += amount

    def charge(self, peer: int, credit: int) -> None:
        if not self.can_send(peer, credit):
            raise AssertionError("charge would exceed the debt threshold")
        self._add(peer, credit)

    def pay(self, peer: int, tokens: int) -> None:
        """Reduce ``peer``'s debt by a token settlement."""
        if tokens <= 0:
            raise ValueError("settlement must be positive")
        self._add(peer, -tokens)

    def check(self) -> None:
        if self.reciprocity:
            assert abs(self.balance) <= self.threshold, "balance beyond threshold"
        else:
            assert 0 <= self.debt_low <= self.threshold and 0 <= self.debt_high <= self.threshold

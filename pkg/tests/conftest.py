"""Shared fixtures: the four-peer worked example and small generated networks."""

import numpy as np
import pytest

from bandsim.accounting import AccountingConfig
from bandsim.config import ExperimentConfig
from bandsim.engine import SimulationState
from bandsim.metrics import MetricsLedger
from bandsim.routing import RoutingPolicy
from bandsim.settlement import PaymentModel
from bandsim.topology import Network, NetworkConfig, generate_network

# gateway G asks for chunk C; F1 and F2 forward, S stores (depth 11)
EXAMPLE = {
    "G": "0110011100100111",
    "F1": "1111001001111001",
    "F2": "1110011011110000",
    "S": "1110011100111101",
}
CHUNK = int("1110011100100111", 2)


def line_network(originator_first=True) -> Network:
    """G-F1-F2-S, each peer linked only to its successor."""
    addrs = [int(EXAMPLE[k], 2) for k in ("G", "F1", "F2", "S")]
    is_orig = [originator_first, False, False, False]
    net = Network(addrs, is_orig, bits=16, depth=11, bucket_size=8)
    for p in range(3):
        net.connect(p, p + 1)
    return net


def make_state(net, omega=16, payment="A_C", rule="strictKademlia", seconds=4, **acct):
    accounting = AccountingConfig(omega=omega, **acct)
    ledger = MetricsLedger(net.n, net.bits + 1, seconds)
    return SimulationState(net, accounting, RoutingPolicy(rule, PaymentModel.parse(payment)), ledger)


@pytest.fixture
def example_line():
    return line_network()


def small_network(seed=0, n=64, bits=8, depth=4, k=3, fraction=0.1, **kw) -> Network:
    cfg = NetworkConfig(size=n, address_bits=bits, bucket_size=k, storage_depth=depth, originator_fraction=fraction,
                        **kw)
    return generate_network(cfg, np.random.default_rng(seed))


SMALL = ExperimentConfig(network_size=600, originator_fraction=0.05, rate_per_originator=100, duration_seconds=3,
                         graph_count=1)


# acceptance verdicts, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import filecmp

import numpy as np
import pytest

from bandsim.config import ConfigError
from bandsim.engine import BALANCE_COLUMNS, SERIES, choose_backend, run_experiment, run_graph
from bandsim.metrics import success_ratio
from bandsim.reports import write_run
from conftest import SMALL, line_network

LEDGER_FIELDS = ("credits_in", "credits_out", "credits_out_originator", "tokens_in", "tokens_out",
                 "tokens_out_originator", "hop_actions", "hop_reward", "forward_count", "forward_reward",
                 "paid_forwards", "total_forwards", "requested", "downloaded", "counters")

VARIANTS = [
    {},
    dict(payment_model="NW_"),
    dict(payment_model="NG_"),
    dict(payment_model="OGF", next_hop_rule="greedyFree"),
    dict(payment_model="OWF"),
    dict(reciprocity=False, free_service="pairwise", payment_model="A_F"),
    dict(free_service="off"),
    dict(shuffle_policy="all"),
    dict(debt_limits=False, credit_model="constant", free_service="off"),
    dict(clique_mode="external", shuffle_policy="originators"),
    dict(clique_mode="internal", originator_bucket_size=20),
]


@pytest.mark.parametrize("changes", VARIANTS, ids=lambda c: ",".join(f"{k}={v}" for k, v in c.items()) or "default")
def test_fast_and_reference_backends_agree(changes):
    cfg = SMALL.replace(state_dump=True, **changes)
    fast = run_graph(cfg.replace(backend="fast"))
    ref = run_graph(cfg.replace(backend="reference"))
    assert (fast.backend, ref.backend) == ("fast", "reference")
    for name in LEDGER_FIELDS:
        assert np.array_equal(getattr(fast.ledger, name), getattr(ref.ledger, name)), name
    assert fast.discarded_debt == ref.discarded_debt
    assert np.array_equal(fast.balances, ref.balances)
    for name in SERIES:
        assert np.allclose(fast.ledger.series[name], ref.ledger.series[name], equal_nan=True), name


def test_zero_duration_runs_nothing():
    g = run_graph(SMALL.replace(duration_seconds=0))
    assert g.ledger.count("routes") == 0
    assert all(len(v) == 0 for v in g.ledger.series.values())


def test_backend_choice():
    assert choose_backend(SMALL) == "fast"
    assert choose_backend(SMALL.replace(cache_policy="lru")) == "reference"
    assert choose_backend(SMALL.replace(route_log=True)) == "reference"
    with pytest.raises(ConfigError):
        SMALL.replace(cache_policy="lru", backend="fast").validate()


def test_settle_all_always_completes_and_conserves_tokens():
    g = run_graph(SMALL.replace(payment_model="A_F", rate_per_originator=400))
    led = g.ledger
    assert success_ratio(led, g.network.originators()) == 1.0
    assert led.count("settlements") > 0
    assert led.tokens_in.sum() == led.tokens_out.sum()
    assert led.credits_in.sum() == led.credits_out.sum()


def test_give_up_when_saturated():
    g = run_graph(SMALL.replace(payment_model="NG_", free_service="off", rate_per_originator=400))
    assert g.ledger.count("given_up") > 0
    assert g.ledger.tokens_in.sum() == 0


def test_wait_defers_requests():
    g = run_graph(SMALL.replace(payment_model="NW_", free_service="off", rate_per_originator=400))
    led = g.ledger
    assert led.count("waits") > 0
    assert led.count("given_up") == 0
    assert led.requested.sum() < 400 * 3 * len(g.network.originators())


def test_hand_built_network_in_engine():
    net = line_network()
    g = run_graph(SMALL.replace(network_size=4, originator_fraction=0.25, rate_per_originator=5, duration_seconds=2),
                  network=net)
    assert g.ledger.requested[0] == 10
    assert g.ledger.credits_in.sum() == g.ledger.credits_out.sum()


def test_caching_reference_run():
    cfg = SMALL.replace(workload="zipf", zipf_catalog_size=200, cache_policy="lru", cache_size=50,
                        originator_cache_policy="lfu", originator_cache_size=100)
    g = run_graph(cfg)
    stats = g.ledger.cache_stats
    assert g.backend == "reference" and stats is not None
    assert stats[:, 0].sum() > 0
    led = g.ledger
    assert led.count("cached") + led.count("originator_cache") > 0
    assert led.count("completed") == led.count("routes")


def test_route_log():
    g = run_graph(SMALL.replace(route_log=True, duration_seconds=1))
    assert len(g.routes) == g.ledger.count("routes") + g.ledger.count("waits")
    for r in g.routes[:50]:
        assert len(r.credits) == len(r.path) - 1


def test_trace_workload(tmp_path):
    trace = tmp_path / "trace.csv"
    trace.write_text("cid,bytes\n" + "".join(f"Qm{i % 7},{4096 * (i % 3 + 1)}\n" for i in range(40)))
    cfg = SMALL.replace(workload="trace", trace_path=str(trace), rate_per_originator=5, duration_seconds=2)
    g = run_graph(cfg)
    assert g.ledger.requested.sum() > 0


def test_parallel_matches_serial_and_csvs_are_identical(tmp_path):
    cfg = SMALL.replace(graph_count=2, shuffle_policy="originators")
    a = run_experiment(cfg)
    b = run_experiment(cfg, parallel=2)
    for ga, gb in zip(a.graphs, b.graphs):
        for name in LEDGER_FIELDS:
            assert np.array_equal(getattr(ga.ledger, name), getattr(gb.ledger, name))
    pa = write_run(tmp_path / "a", a)
    pb = write_run(tmp_path / "b", b)
    for x, y in zip(pa, pb):
        assert filecmp.cmp(x, y, shallow=False), x.name


def test_graph_seeds_differ():
    res = run_experiment(SMALL.replace(graph_count=2, seed=10))
    assert [g.seed for g in res.graphs] == [10, 11]
    assert not np.array_equal(res.graphs[0].network.addresses, res.graphs[1].network.addresses)


def test_balance_snapshot_respects_thresholds():
    g = run_graph(SMALL.replace(state_dump=True, duration_seconds=1))
    cols = {name: g.balances[:, i] for i, name in enumerate(BALANCE_COLUMNS)}
    assert len(g.balances) == int(g.network.edge_alive.sum())
    assert (cols["lowId"] < cols["highId"]).all()
    assert (np.abs(cols["balance"]) <= cols["threshold"]).all()
    assert np.abs(cols["balance"]).sum() > 0
    assert g.balances.tolist() == sorted(g.balances.tolist())


def test_state_dump_and_per_peer_reports(tmp_path):
    trace = tmp_path / "trace.csv"
    trace.write_text("cid,bytes\n" + "".join(f"Qm{i % 7},{4096 * (i % 3 + 1)}\n" for i in range(40)))
    cfg = SMALL.replace(workload="trace", trace_path=str(trace), rate_per_originator=5, duration_seconds=2,
                        cache_policy="lru", cache_size=10, state_dump=True)
    res = run_experiment(cfg)
    names = {p.name for p in write_run(tmp_path / "out", res)}
    assert {"settlement.csv", "cache_counters.csv", "balances.csv", "network_0.csv", "rank_frequency.csv"} <= names
    out = tmp_path / "out"
    settle = np.genfromtxt(out / "settlement.csv", delimiter=",", names=True)
    assert len(settle) == cfg.network_size
    assert np.array_equal(settle["net"], settle["tokensIn"] - settle["tokensOut"] + settle["tokensOutAsOriginator"])
    assert (out / "rank_frequency.csv").read_text().splitlines()[:2] == ["rank,cid,count", "1,Qm0,6"]
    counters = np.genfromtxt(out / "cache_counters.csv", delimiter=",", names=True)
    assert counters["hits"].sum() + counters["misses"].sum() > 0
    header = (out / "network_0.csv").read_text().splitlines()[0]
    assert header.strip() == "peerId,address,isOriginator,neighborIds"

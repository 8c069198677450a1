import itertools

import numpy as np
import pytest

from bandsim.metrics import (MetricsLedger, effective_download_rate, even_share_by_hop, even_share_by_neighborhood,
                             gini, hop_reward_fractions, income_fairness, mean_forward_reward_and_path_length,
                             paid_forward_heatmap, success_ratio, top_decile_share)


def gini_pairs(values):
    m = np.asarray(values, dtype=np.float64)
    if m.sum() == 0:
        return 0.0
    return sum(abs(a - b) for a, b in itertools.product(m, m)) / (2 * len(m) * m.sum())


def test_gini_examples():
    assert gini([5, 5, 5, 5]) == 0
    assert gini([0, 0, 0, 10]) == 0.75
    assert gini([0, 1]) == 0.5
    assert gini([0, 0]) == 0.0
    with pytest.raises(ValueError):
        gini([])
    with pytest.raises(ValueError):
        gini([1, -1])


def test_gini_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.exponential(size=rng.integers(1, 60)) * rng.integers(0, 2, 1)[0]
        assert abs(gini(v) - gini_pairs(v)) < 1e-12
        assert abs(gini(v * 37.5) - gini(v)) < 1e-12


def _ledger(n=3, hops=4, seconds=2):
    return MetricsLedger(n, hops, seconds)


def test_income_fairness_toy():
    led = _ledger()
    led.credits_in[:] = 2
    assert income_fairness(led, "accounting", np.zeros(3, bool)) == 0
    assert income_fairness(led, "settlement", np.zeros(3, bool)) == 0
    led.credits_out[0] = 4
    led.credits_out_originator[0] = 4
    assert income_fairness(led, "accounting", np.array([True, False, False]), "nonOriginators") == 0
    with pytest.raises(ValueError):
        income_fairness(led, "accounting", np.ones(3, bool), "nonOriginators")
    with pytest.raises(ValueError):
        income_fairness(led, "karma", np.zeros(3, bool))


def test_clamped_fairness_ignores_negative_income():
    led = _ledger()
    led.tokens_in[:] = [0, 5, 5]
    led.tokens_out[:] = [10, 0, 0]
    assert income_fairness(led, "settlement", np.zeros(3, bool), clamp=True) == gini([0, 5, 5])
    assert income_fairness(led, "settlement", np.zeros(3, bool)) == gini([10, 5, 5])


def test_hop_reward_fractions():
    led = _ledger()
    led.hop_reward[1] = 7
    assert hop_reward_fractions(led)[0] == 1.0
    led.hop_reward[1:4] = [2, 1, 1]
    assert hop_reward_fractions(led).tolist() == [0.5, 0.25, 0.25]


def test_even_share_equal_incomes():
    n = 50
    led = MetricsLedger(n, 4, 1)
    led.hop_actions[:, 1] = 3
    led.hop_actions[: n // 2, 2] = 2
    income = np.full(n, 6.0)
    assert all(r == pytest.approx(1.0) for _, r in even_share_by_hop(led, income))
    assert all(r == pytest.approx(1.0) for _, r in even_share_by_neighborhood(income, np.arange(n) % 4 + 1))
    assert top_decile_share(income, np.arange(n, dtype=float)) == pytest.approx(0.1)


def test_heatmap_and_rates():
    led = _ledger(n=4, hops=3, seconds=2)
    assert (paid_forward_heatmap(led) == 0).all()
    led.total_forwards[1] = [4, 4]
    led.paid_forwards[1] = [0, 2]
    assert paid_forward_heatmap(led)[1].tolist() == [0.0, 0.5]
    led.requested[[0, 1]] = 10
    led.downloaded[[0, 1]] = [10, 5]
    assert success_ratio(led, [0, 1]) == 0.75
    assert effective_download_rate(led, [0], 10) == 4.0
    assert success_ratio(led, [2]) == 1.0


def test_forward_reward_and_path_length():
    led = _ledger()
    led.forward_count[:] = [0, 2, 2]
    led.forward_reward[:] = [0, 6, 2]
    led.counters[:] = 0
    from bandsim.metrics import COUNTER_INDEX
    led.counters[COUNTER_INDEX["network_routes"]] = 2
    led.counters[COUNTER_INDEX["path_edges"]] = 5
    assert mean_forward_reward_and_path_length(led) == (2.0, 2.5)

import numpy as np
import pytest

from bandsim.topology import (Network, NetworkConfig, form_internal_clique, generate_network, neighborhood_size,
                              neighborhood_sizes, shuffle_neighbors, two_choices_address)
from conftest import small_network


def rng(seed=0):
    return np.random.default_rng(seed)


def test_two_peers_link_each_other():
    net = generate_network(NetworkConfig(size=2, address_bits=8, bucket_size=1, storage_depth=3), rng())
    level = net.common_bits(0, 1)
    assert net.bucket(0, level).tolist() == [1]
    assert net.bucket(1, level).tolist() == [0]
    assert net.degree().tolist() == [1, 1]


def test_full_address_space_with_large_k_is_complete():
    # every address of a small space, k above every bucket population
    net = generate_network(NetworkConfig(size=256, address_bits=8, bucket_size=128, storage_depth=3), rng())
    assert (net.degree() == 255).all()
    net.check_invariants()


def test_generated_invariants_and_degree_cap():
    net = small_network(n=400, bits=10, depth=5, k=4)
    net.check_invariants()
    assert net.is_connected()
    assert (net.count <= net.kvec[:, None]).all()
    # buckets are capped on both ends, so a short bucket only misses peers whose own bucket is full
    for p in range(net.n):
        for level in range(net.bits):
            if net.count[p, level] >= net.kvec[p]:
                continue
            linked = set(net.bucket(p, level).tolist())
            for q in range(net.n):
                if q != p and q not in linked and net.common_bits(p, q) == level:
                    assert net.count[q, level] >= net.kvec[q]


def test_default_size_mean_degree():
    net = generate_network(NetworkConfig(), rng(1))
    mean = net.degree().mean()
    # roughly k per populated bucket; the deepest buckets are underfull
    assert 75 <= mean <= 95


def test_two_choices_tie_and_preference():
    class FixedRng:
        def __init__(self, values):
            self.values = list(values)

        def integers(self, lo, hi, size, dtype, endpoint):
            out = np.array(self.values[:size] + [0] * max(0, size - len(self.values)), dtype=dtype)
            self.values = self.values[size:]
            return out

    # both empty: first draw wins
    occ, used = {}, set()
    assert two_choices_address(FixedRng([0b10000000, 0b01000000]), occ, 8, 2, used) == 0b10000000
    assert occ == {0b10: 1} and used == {0b10000000}
    # A in a neighbourhood of 3, B in one of 1: B wins
    occ = {0b00: 3, 0b11: 1}
    assert two_choices_address(FixedRng([0b00000001, 0b11000001]), occ, 8, 2, set()) == 0b11000001


def test_neighborhood_statistics():
    random_sizes = [np.sum(neighborhood_sizes(generate_network(NetworkConfig(), rng(s))) == 1) for s in range(3)]
    # about 58.6 singleton neighbourhoods out of 2048 for random placement
    assert 45 <= np.mean(random_sizes) <= 75
    singles = []
    for s in range(3):
        two = neighborhood_sizes(generate_network(NetworkConfig(address_assignment="two-choices"), rng(s)))
        assert two.max() < 8
        singles.append(np.sum(two == 1))
    # a handful of singletons survive early ties; far fewer than with random placement
    assert np.mean(singles) <= 3


def test_neighborhood_size_lookup():
    net = small_network()
    ids = net.neighborhood_ids()
    assert neighborhood_size(net, int(ids[0])) == int((ids == ids[0]).sum())
    empty = Network(np.empty(0, np.uint64), np.empty(0, bool), 8, 3, 2)
    assert neighborhood_size(empty, 0) == 0


def test_single_originator_clique_equals_random_fill():
    cfg = NetworkConfig(size=300, address_bits=10, bucket_size=3, storage_depth=5, originator_fraction=1 / 300)
    a = generate_network(cfg, rng(4))
    b = form_internal_clique(a, rng(9))
    c = form_internal_clique(a, rng(9))
    assert np.array_equal(b.count, c.count)
    b.check_invariants()


def test_internal_clique_prefers_originators():
    cfg = NetworkConfig(size=2000, address_bits=12, bucket_size=4, storage_depth=7, originator_fraction=0.05)
    plain = generate_network(cfg, rng(2))
    clique = generate_network(NetworkConfig(**{**cfg.__dict__, "clique_mode": "internal"}), rng(2))

    def orig_links(net):
        o = net.originators()
        return sum(int(net.is_originator[q]) for p in o for q in net.neighbors(int(p)))

    assert orig_links(clique) > 3 * orig_links(plain)
    clique.check_invariants()


def test_shuffle_edge_cases():
    net = small_network(fraction=0.1)
    no_orig = Network(net.addresses, np.zeros(net.n, bool), net.bits, net.depth, net.bucket_size)
    report = shuffle_neighbors(no_orig, "originators", rng())
    assert len(report.dropped) == 0 and len(report.created) == 0
    pair = generate_network(NetworkConfig(size=2, address_bits=8, bucket_size=1, storage_depth=3), rng())
    before = pair.nbr.copy()
    shuffle_neighbors(pair, "all", rng(3))
    assert np.array_equal(before, pair.nbr)
    with pytest.raises(ValueError):
        shuffle_neighbors(net, "sometimes", rng())


def test_shuffle_keeps_invariants():
    net = small_network(n=300, bits=10, depth=5, k=3, fraction=0.1)
    r = rng(5)
    for _ in range(5):
        report = shuffle_neighbors(net, "all", r)
        net.check_invariants()
        assert (net.count <= net.slot_cap).all()
        alive = set(np.flatnonzero(net.edge_alive).tolist())
        assert set(report.created[:, 2].tolist()) <= alive
        for lo, hi, e in report.created:
            assert net.edge_lo[e] == lo and net.edge_hi[e] == hi
    assert len(report.dropped) > 0


def test_connect_rejects_duplicates():
    net = Network([0b00000000, 0b10000000], [True, False], 8, 3, 1)
    net.connect(0, 1)
    with pytest.raises(ValueError):
        net.connect(1, 0)
    with pytest.raises(ValueError):
        net.connect(0, 0)


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(size=300, address_bits=8).validate()
    with pytest.raises(ValueError):
        NetworkConfig(shuffle_policy="sometimes").validate()
    assert NetworkConfig(size=10_000, originator_fraction=0.005).originator_count == 50
    assert NetworkConfig(size=10, originator_fraction=0.001).originator_count == 1


def test_packed_copy_keeps_connections():
    net = small_network(3, shuffle_policy="all")
    shuffle_neighbors(net, "all", np.random.default_rng(1))
    packed = net.packed()
    packed.check_invariants()
    assert packed.nbr.size == net.degree().sum() < net.nbr.size
    assert packed.max_edges == int(net.edge_alive.sum())
    for p in range(net.n):
        assert packed.neighbors(p) == net.neighbors(p)
    with pytest.raises(ValueError, match="full"):
        p, q = next((p, q) for p in range(net.n) for q in range(net.n)
                    if p != q and q not in packed.neighbors(p))
        packed.connect(p, q)

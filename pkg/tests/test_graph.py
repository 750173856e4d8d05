"""Graph value type, mutation ops, distance queries and ER generation."""

import numpy as np
import pytest

from graphattack.graph import (
    Graph,
    add_edge,
    b_hop_neighborhood,
    connected_components,
    delete_edge,
    erdos_renyi,
    shortest_hop_distance,
    toggle_edge,
)

from conftest import bfs_component_count, path_graph


class TestGraphInvariants:
    def test_edges_canonical_and_sorted(self):
        g = Graph(4, [(2, 1), (0, 3), (3, 1)])
        assert g.edges == ((0, 3), (1, 2), (1, 3))

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, [(1, 1)])

    def test_rejects_duplicate_edges(self):
        with pytest.raises(ValueError, match="duplicate"):
            Graph(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph(3, [(0, 5)])

    def test_feature_rows_must_match(self):
        with pytest.raises(ValueError):
            Graph(3, [], node_features=np.ones((2, 1)))
        with pytest.raises(ValueError):
            Graph(3, [(0, 1)], edge_features=np.ones((2, 1)))

    def test_edge_features_follow_canonical_sort(self):
        g = Graph(3, [(2, 1), (0, 1)], edge_features=np.array([[9.0], [7.0]]))
        assert g.edges == ((0, 1), (1, 2))
        assert g.edge_features[:, 0].tolist() == [7.0, 9.0]

    def test_features_are_read_only(self):
        g = Graph(2, [(0, 1)], node_features=np.ones((2, 1)))
        with pytest.raises(ValueError):
            g.node_features[0, 0] = 5.0


class TestAddDelete:
    def test_add_to_empty(self):
        g = Graph(3)
        g2, changed = add_edge(g, 0, 1)
        assert changed and g2.edges == ((0, 1),)
        assert g.edges == ()  # input untouched

    def test_add_duplicate_is_noop(self):
        g = Graph(3, [(0, 1)])
        g2, changed = add_edge(g, 1, 0)
        assert not changed and g2 is g

    def test_add_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            add_edge(Graph(3), 0, 5)

    def test_delete_existing(self):
        g = Graph(3, [(0, 1), (1, 2)])
        g2, changed = delete_edge(g, 0, 1)
        assert changed and g2.edges == ((1, 2),)

    def test_delete_missing_is_noop(self):
        g = Graph(3, [(1, 2)])
        g2, changed = delete_edge(g, 0, 1)
        assert not changed and g2 is g

    def test_delete_bridge_raises_component_count(self):
        g = path_graph(3)
        assert connected_components(g) == 1
        g2, _ = delete_edge(g, 1, 2)
        assert connected_components(g2) == bfs_component_count(g2) == 2

    def test_add_then_delete_is_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            g = erdos_renyi(8, 0.3, rng)
            u, v = rng.integers(0, 8, size=2)
            if u == v:
                continue
            if g.has_edge(u, v):
                g2, _ = delete_edge(g, u, v)
                g3, _ = add_edge(g2, u, v)
            else:
                g2, _ = add_edge(g, u, v)
                g3, _ = delete_edge(g2, u, v)
            assert g3.edges == g.edges

    def test_toggle_edge_kinds(self):
        g = Graph(3, [(0, 1)])
        _, kind = toggle_edge(g, 0, 1)
        assert kind == "delete"
        _, kind = toggle_edge(g, 1, 2)
        assert kind == "add"

    def test_component_count_monotone_under_mutation(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            g = erdos_renyi(10, 0.2, rng)
            base = connected_components(g)
            u, v = sorted(rng.choice(10, size=2, replace=False))
            added, changed = add_edge(g, u, v)
            if changed:
                assert connected_components(added) <= base
            if g.edges:
                e = g.edges[rng.integers(len(g.edges))]
                removed, _ = delete_edge(g, *e)
                assert connected_components(removed) >= base


class TestDistance:
    def test_path_distance(self):
        g = path_graph(4)
        assert shortest_hop_distance(g, 0, 3) == 3

    def test_self_distance_zero(self):
        assert shortest_hop_distance(path_graph(3), 2, 2) == 0

    def test_unreachable_is_none(self):
        g = Graph(2)
        assert shortest_hop_distance(g, 0, 1) is None

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            shortest_hop_distance(path_graph(3), 0, 7)

    def test_matches_networkx(self):
        nx = pytest.importorskip("networkx")
        rng = np.random.default_rng(2)
        for _ in range(20):
            g = erdos_renyi(12, 0.2, rng)
            h = nx.Graph()
            h.add_nodes_from(range(12))
            h.add_edges_from(g.edges)
            lengths = dict(nx.shortest_path_length(h, source=0))
            for v in range(12):
                expect = lengths.get(v)
                assert shortest_hop_distance(g, 0, v) == expect


class TestBallAndComponents:
    def test_path_ball(self):
        g = path_graph(4)
        assert b_hop_neighborhood(g, 0, 2) == {0, 1, 2}

    def test_zero_hops_is_self(self):
        g = path_graph(4)
        assert b_hop_neighborhood(g, 2, 0) == {2}

    def test_complete_graph_one_hop(self):
        g = Graph(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
        assert b_hop_neighborhood(g, 0, 1) == {0, 1, 2, 3}

    def test_ball_monotone_in_b(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            g = erdos_renyi(12, 0.15, rng)
            c = int(rng.integers(12))
            balls = [b_hop_neighborhood(g, c, b) for b in range(4)]
            for small, big in zip(balls, balls[1:]):
                assert small <= big

    def test_components_examples(self):
        assert connected_components(Graph(4)) == 4
        assert connected_components(path_graph(5)) == 1

    def test_components_match_bfs_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            g = erdos_renyi(n, float(rng.random() * 0.3), rng)
            assert connected_components(g) == bfs_component_count(g)


class TestErdosRenyi:
    def test_p_zero_empty(self):
        assert erdos_renyi(5, 0.0, 7).num_edges == 0

    def test_p_one_complete(self):
        assert erdos_renyi(5, 1.0, 7).num_edges == 10

    def test_edge_count_binomial(self):
        # mean edge count over many seeds within 5 sigma of 1225 * 0.1
        rng = np.random.default_rng(5)
        n_pairs = 50 * 49 // 2
        counts = [erdos_renyi(50, 0.1, rng).num_edges for _ in range(300)]
        mean = np.mean(counts)
        sigma = np.sqrt(n_pairs * 0.1 * 0.9 / len(counts))
        assert abs(mean - n_pairs * 0.1) < 5 * sigma

    def test_deterministic_per_seed(self):
        assert erdos_renyi(20, 0.3, 42).edges == erdos_renyi(20, 0.3, 42).edges

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            erdos_renyi(5, 1.5, 0)

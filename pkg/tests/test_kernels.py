"""Backend parity and correctness of the hot kernels."""

import numpy as np
import pytest

from graphattack.graph import erdos_renyi
from graphattack.kernels import _pykernels, backend_name

try:
    from graphattack.kernels import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


def _case(rng, n=15, p=0.3, d=4):
    g = erdos_renyi(n, p, rng)
    indptr, indices = g.csr()
    values = np.ascontiguousarray(rng.normal(size=(n, d)))
    weights = np.ascontiguousarray(rng.random(indices.shape[0]))
    ea = g.edge_array()
    return g, indptr, indices, values, weights, ea


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit("_", 1)[-1])
class TestKernels:
    def test_neighbor_sum_equals_dense_matmul(self, impl):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g, indptr, indices, values, _, _ = _case(rng)
            out = impl.neighbor_sum(indptr, indices, values)
            assert np.allclose(out, g.adjacency_matrix() @ values)

    def test_weighted_neighbor_sum_equals_dense(self, impl):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g, indptr, indices, values, weights, _ = _case(rng)
            dense = np.zeros((g.num_nodes, g.num_nodes))
            rows = np.repeat(np.arange(g.num_nodes), np.diff(indptr))
            dense[rows, indices] = weights
            out = impl.weighted_neighbor_sum(indptr, indices, weights, values)
            assert np.allclose(out, dense @ values)

    def test_bfs_hops_matches_networkx(self, impl):
        nx = pytest.importorskip("networkx")
        rng = np.random.default_rng(2)
        for _ in range(10):
            g, indptr, indices, _, _, _ = _case(rng)
            h = nx.Graph()
            h.add_nodes_from(range(g.num_nodes))
            h.add_edges_from(g.edges)
            lengths = dict(nx.shortest_path_length(h, source=0))
            hops = impl.bfs_hops(indptr, indices, 0)
            for v in range(g.num_nodes):
                assert hops[v] == lengths.get(v, -1)

    def test_component_count_matches_networkx(self, impl):
        nx = pytest.importorskip("networkx")
        rng = np.random.default_rng(3)
        for _ in range(10):
            g, _, _, _, _, ea = _case(rng, p=0.1)
            h = nx.Graph()
            h.add_nodes_from(range(g.num_nodes))
            h.add_edges_from(g.edges)
            count = impl.component_count(g.num_nodes,
                                         np.ascontiguousarray(ea[:, 0]),
                                         np.ascontiguousarray(ea[:, 1]))
            assert count == nx.number_connected_components(h)

    def test_accepts_read_only_values(self, impl):
        rng = np.random.default_rng(4)
        _, indptr, indices, values, weights, _ = _case(rng)
        values.flags.writeable = False
        weights.flags.writeable = False
        impl.neighbor_sum(indptr, indices, values)
        impl.weighted_neighbor_sum(indptr, indices, weights, values)


@pytest.mark.skipif(_ckernels is None, reason="compiled backend not built")
def test_backends_agree():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        g, indptr, indices, values, weights, ea = _case(rng, n=n, p=float(rng.random() * 0.4))
        assert np.allclose(_pykernels.neighbor_sum(indptr, indices, values),
                           _ckernels.neighbor_sum(indptr, indices, values))
        assert np.allclose(
            _pykernels.weighted_neighbor_sum(indptr, indices, weights, values),
            _ckernels.weighted_neighbor_sum(indptr, indices, weights, values))
        assert np.array_equal(_pykernels.bfs_hops(indptr, indices, 0),
                              _ckernels.bfs_hops(indptr, indices, 0))
        eu = np.ascontiguousarray(ea[:, 0])
        ev = np.ascontiguousarray(ea[:, 1])
        assert (_pykernels.component_count(n, eu, ev)
                == _ckernels.component_count(n, eu, ev))


def test_backend_name_reports():
    assert backend_name() in ("python", "cython")

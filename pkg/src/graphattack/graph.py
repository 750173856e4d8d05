"""Immutable undirected graphs: mutation, distance queries, random generation.

Graphs are value objects: every mutation returns a new graph that shares the
feature arrays of its parent. Attack code branches and backtracks over
candidate modifications, so snapshots must stay valid forever.
"""

from __future__ import annotations

import bisect

import numpy as np

from .kernels import bfs_hops, component_count as _uf_component_count


def _as_readonly(arr):
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


class Graph:
    """Undirected graph with canonical (u < v) edges and optional features.

    Invariants: no self-loops, no duplicate edges, endpoints in range,
    feature arrays (when present) aligned row-for-row with nodes / the
    sorted edge list.
    """

    __slots__ = ("num_nodes", "edges", "node_features", "edge_features",
                 "_edge_set", "_csr")

    def __init__(self, num_nodes, edges=(), node_features=None, edge_features=None):
        if num_nodes < 1:
            raise ValueError("graph needs at least one node")
        self.num_nodes = int(num_nodes)

        pairs = []
        for u, v in edges:
            pairs.append(self._canonical_pair(u, v))
        order = sorted(range(len(pairs)), key=pairs.__getitem__)
        canonical = tuple(pairs[i] for i in order)
        for a, b in zip(canonical, canonical[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        self.edges = canonical
        self._edge_set = frozenset(canonical)
        self._csr = None

        if node_features is not None:
            node_features = _as_readonly(np.atleast_2d(node_features))
            if node_features.shape[0] != self.num_nodes:
                raise ValueError("node feature rows must match num_nodes")
        self.node_features = node_features

        if edge_features is not None:
            edge_features = np.atleast_2d(edge_features)
            if edge_features.shape[0] != len(canonical):
                raise ValueError("edge feature rows must match edge count")
            edge_features = _as_readonly(edge_features[order])
        self.edge_features = edge_features

    @classmethod
    def _from_canonical(cls, num_nodes, edges, node_features, edge_features):
        """Construct without validation; ``edges`` must be sorted canonical."""
        g = cls.__new__(cls)
        g.num_nodes = num_nodes
        g.edges = edges
        g._edge_set = frozenset(edges)
        g._csr = None
        g.node_features = node_features
        g.edge_features = edge_features
        return g

    def _canonical_pair(self, u, v):
        u, v = int(u), int(v)
        if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
            raise ValueError(f"node out of range: ({u}, {v}) with {self.num_nodes} nodes")
        if u == v:
            raise ValueError(f"self-loop not allowed: {u}")
        return (u, v) if u < v else (v, u)

    @property
    def num_edges(self):
        return len(self.edges)

    def has_edge(self, u, v):
        return self._canonical_pair(u, v) in self._edge_set

    def edge_array(self):
        """(E, 2) int64 array of canonical endpoints."""
        if not self.edges:
            return np.empty((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def csr(self):
        """Cached (indptr, indices) adjacency in CSR form."""
        if self._csr is None:
            ea = self.edge_array()
            rows = np.concatenate([ea[:, 0], ea[:, 1]])
            cols = np.concatenate([ea[:, 1], ea[:, 0]])
            order = np.argsort(rows, kind="stable")
            indices = np.ascontiguousarray(cols[order])
            counts = np.bincount(rows, minlength=self.num_nodes)
            indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            self._csr = (indptr, indices)
        return self._csr

    def degrees(self):
        indptr, _ = self.csr()
        return np.diff(indptr)

    def neighbors(self, v):
        indptr, indices = self.csr()
        return indices[indptr[v] : indptr[v + 1]]

    def adjacency_matrix(self):
        """Dense symmetric 0/1 float64 adjacency matrix."""
        a = np.zeros((self.num_nodes, self.num_nodes), dtype=np.float64)
        ea = self.edge_array()
        a[ea[:, 0], ea[:, 1]] = 1.0
        a[ea[:, 1], ea[:, 0]] = 1.0
        return a

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.num_nodes != other.num_nodes or self.edges != other.edges:
            return False
        for a, b in ((self.node_features, other.node_features),
                     (self.edge_features, other.edge_features)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    def __hash__(self):
        return hash((self.num_nodes, self.edges))

    def __repr__(self):
        return f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


def add_edge(g, u, v):
    """Insert edge (u, v); returns (graph, changed).

    changed=False flags the no-op when the edge already exists; the input
    graph is never mutated. New edges get zero feature rows when the graph
    carries edge features.
    """
    pair = g._canonical_pair(u, v)
    if pair in g._edge_set:
        return g, False
    pos = bisect.bisect_left(g.edges, pair)
    edges = g.edges[:pos] + (pair,) + g.edges[pos:]
    feats = g.edge_features
    if feats is not None:
        feats = _as_readonly(np.insert(np.asarray(feats), pos, 0.0, axis=0))
    return Graph._from_canonical(g.num_nodes, edges, g.node_features, feats), True


def delete_edge(g, u, v):
    """Remove edge (u, v); returns (graph, changed) with no-op flag as above."""
    pair = g._canonical_pair(u, v)
    if pair not in g._edge_set:
        return g, False
    pos = bisect.bisect_left(g.edges, pair)
    edges = g.edges[:pos] + g.edges[pos + 1 :]
    feats = g.edge_features
    if feats is not None:
        feats = _as_readonly(np.delete(np.asarray(feats), pos, axis=0))
    return Graph._from_canonical(g.num_nodes, edges, g.node_features, feats), True


def toggle_edge(g, u, v):
    """Flip edge existence; returns (graph, kind) with kind 'add' or 'delete'."""
    if g.has_edge(u, v):
        out, _ = delete_edge(g, u, v)
        return out, "delete"
    out, _ = add_edge(g, u, v)
    return out, "add"


def shortest_hop_distance(g, u, v):
    """BFS hop count between u and v; None when unreachable."""
    for node in (u, v):
        if not (0 <= int(node) < g.num_nodes):
            raise ValueError(f"node out of range: {node}")
    if u == v:
        return 0
    indptr, indices = g.csr()
    hops = bfs_hops(indptr, indices, int(u))
    d = int(hops[int(v)])
    return None if d < 0 else d


def hop_distances(g, source):
    """Hop distance from ``source`` to every node; -1 where unreachable."""
    if not (0 <= int(source) < g.num_nodes):
        raise ValueError(f"node out of range: {source}")
    indptr, indices = g.csr()
    return bfs_hops(indptr, indices, int(source))


def b_hop_neighborhood(g, c, b):
    """All nodes within b hops of c (including c itself)."""
    if b < 0:
        raise ValueError("hop bound must be non-negative")
    hops = hop_distances(g, c)
    return frozenset(int(v) for v in np.flatnonzero((hops >= 0) & (hops <= b)))


def connected_components(g):
    """Number of connected components (union-find)."""
    ea = g.edge_array()
    return int(_uf_component_count(g.num_nodes,
                                   np.ascontiguousarray(ea[:, 0]),
                                   np.ascontiguousarray(ea[:, 1])))


def as_rng(seed):
    """Pass numpy Generators through; seed anything else."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def erdos_renyi(n, p, rng):
    """G(n, p): each unordered pair is an edge independently with prob p.

    Pairs are drawn in row-major upper-triangle order, so results are
    reproducible for a given generator state.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must be in [0, 1]")
    rng = as_rng(rng)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.shape[0]) < p
    edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
    return Graph(n, edges)

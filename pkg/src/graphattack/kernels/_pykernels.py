"""Pure-numpy fallbacks for the compiled graph kernels.

Same contracts as ``_ckernels``; used automatically when the compiled
extension is unavailable or when ``GRAPHATTACK_KERNELS=py`` is set.
"""

from collections import deque

import numpy as np


def neighbor_sum(indptr, indices, values):
    """out[v] = sum of values[u] over the CSR neighbors u of v."""
    n = indptr.shape[0] - 1
    out = np.zeros((n, values.shape[1]), dtype=np.float64)
    if indices.shape[0] == 0:
        return out
    rows = np.repeat(np.arange(n), np.diff(indptr))
    np.add.at(out, rows, values[indices])
    return out


def weighted_neighbor_sum(indptr, indices, weights, values):
    """out[v] = sum of weights[k] * values[indices[k]] over v's CSR slots k."""
    n = indptr.shape[0] - 1
    out = np.zeros((n, values.shape[1]), dtype=np.float64)
    if indices.shape[0] == 0:
        return out
    rows = np.repeat(np.arange(n), np.diff(indptr))
    np.add.at(out, rows, values[indices] * weights[:, None])
    return out


def bfs_hops(indptr, indices, source):
    """Hop distance from ``source`` to every node; -1 where unreachable."""
    n = indptr.shape[0] - 1
    hops = np.full(n, -1, dtype=np.int64)
    hops[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = hops[u]
        for v in indices[indptr[u] : indptr[u + 1]]:
            if hops[v] < 0:
                hops[v] = du + 1
                queue.append(int(v))
    return hops


def component_count(num_nodes, edges_u, edges_v):
    """Number of connected components, by union-find with path halving."""
    parent = list(range(num_nodes))
    count = num_nodes
    for u, v in zip(edges_u, edges_v):
        ru = int(u)
        while parent[ru] != ru:
            parent[ru] = parent[parent[ru]]
            ru = parent[ru]
        rv = int(v)
        while parent[rv] != rv:
            parent[rv] = parent[parent[rv]]
            rv = parent[rv]
        if ru != rv:
            parent[rv] = ru
            count -= 1
    return count

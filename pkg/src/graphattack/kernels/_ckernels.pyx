# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: neighbor aggregation, BFS hops, union-find.

Contracts mirror ``_pykernels``; both backends are exercised by the test
suite and compared by ``benchmarks/bench_kernels.py``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def neighbor_sum(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                 const cnp.float64_t[:, ::1] values):
    """out[v] = sum of values[u] over the CSR neighbors u of v."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = values.shape[1]
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t v, k, j, u
    with nogil:
        for v in range(n):
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                for j in range(d):
                    out[v, j] += values[u, j]
    return out_arr


def weighted_neighbor_sum(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                          const cnp.float64_t[::1] weights,
                          const cnp.float64_t[:, ::1] values):
    """out[v] = sum of weights[k] * values[indices[k]] over v's CSR slots k."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = values.shape[1]
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef cnp.float64_t w
    cdef Py_ssize_t v, k, j, u
    with nogil:
        for v in range(n):
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                w = weights[k]
                for j in range(d):
                    out[v, j] += w * values[u, j]
    return out_arr


def bfs_hops(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices, Py_ssize_t source):
    """Hop distance from ``source`` to every node; -1 where unreachable."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    hops_arr = np.full(n, -1, dtype=np.int64)
    queue_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] hops = hops_arr
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, u, k, v
    cdef cnp.int64_t du
    hops[source] = 0
    queue[tail] = source
    tail += 1
    with nogil:
        while head < tail:
            u = queue[head]
            head += 1
            du = hops[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if hops[v] < 0:
                    hops[v] = du + 1
                    queue[tail] = v
                    tail += 1
    return hops_arr


def component_count(Py_ssize_t num_nodes, const cnp.int64_t[::1] edges_u,
                    const cnp.int64_t[::1] edges_v):
    """Number of connected components, by union-find with path halving."""
    parent_arr = np.arange(num_nodes, dtype=np.int64)
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef Py_ssize_t count = num_nodes
    cdef Py_ssize_t e, ru, rv
    cdef Py_ssize_t num_edges = edges_u.shape[0]
    with nogil:
        for e in range(num_edges):
            ru = edges_u[e]
            while parent[ru] != ru:
                parent[ru] = parent[parent[ru]]
                ru = parent[ru]
            rv = edges_v[e]
            while parent[rv] != rv:
                parent[rv] = parent[parent[rv]]
                rv = parent[rv]
            if ru != rv:
                parent[rv] = ru
                count -= 1
    return count

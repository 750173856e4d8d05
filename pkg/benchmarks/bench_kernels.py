"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from graphattack.graph import erdos_renyi
from graphattack.kernels import _pykernels

try:
    from graphattack.kernels import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, *args, repeat=200):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench_case(n, p, d, repeat):
    rng = np.random.default_rng(0)
    g = erdos_renyi(n, p, rng)
    indptr, indices = g.csr()
    values = np.ascontiguousarray(rng.normal(size=(n, d)))
    weights = np.ascontiguousarray(rng.random(indices.shape[0]))
    ea = g.edge_array()
    eu = np.ascontiguousarray(ea[:, 0])
    ev = np.ascontiguousarray(ea[:, 1])

    rows = []
    cases = [
        ("neighbor_sum", (indptr, indices, values)),
        ("weighted_neighbor_sum", (indptr, indices, weights, values)),
        ("bfs_hops", (indptr, indices, 0)),
        ("component_count", (n, eu, ev)),
    ]
    for name, args in cases:
        t_py = timeit(getattr(_pykernels, name), *args, repeat=repeat)
        if _ckernels is not None:
            t_c = timeit(getattr(_ckernels, name), *args, repeat=repeat)
            ok = np.allclose(np.asarray(getattr(_pykernels, name)(*args), dtype=float),
                             np.asarray(getattr(_ckernels, name)(*args), dtype=float))
            rows.append((name, t_py, t_c, t_py / t_c, ok))
        else:
            rows.append((name, t_py, None, None, True))
    return rows


def main():
    print(f"compiled backend available: {_ckernels is not None}")
    for n, p, d, repeat in [(20, 0.4, 32, 2000), (100, 0.1, 64, 500), (2000, 0.003, 32, 20)]:
        print(f"\n--- n={n} p={p} d={d} ---")
        header = f"{'kernel':24s} {'python':>10s} {'cython':>10s} {'speedup':>8s} match"
        print(header)
        for name, t_py, t_c, speedup, ok in bench_case(n, p, d, repeat):
            c_txt = f"{t_c*1e6:8.1f}us" if t_c is not None else "       -"
            s_txt = f"{speedup:7.1f}x" if speedup is not None else "       -"
            print(f"{name:24s} {t_py*1e6:8.1f}us {c_txt} {s_txt} {ok}")


if __name__ == "__main__":
    main()

"""Datasets: labeled instances, splits, synthetic generators and file I/O.

Two task flavors are supported: inductive graph classification (one label
per graph) and transductive node classification (one shared graph, labels
on target nodes).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph import Graph, as_rng, connected_components, erdos_renyi

TASK_GRAPH = "inductive-graph"
TASK_NODE = "transductive-node"

SPLIT_NAMES = ("train", "test_I", "test_II")


@dataclass(frozen=True)
class DataInstance:
    """(graph, optional target node, label) triple."""

    graph: Graph
    target_node: int | None
    label: int


class Dataset:
    """Instance list plus named disjoint splits (train / test_I / test_II)."""

    def __init__(self, task, instances, splits):
        if task not in (TASK_GRAPH, TASK_NODE):
            raise ValueError(f"unknown task: {task}")
        self.task = task
        self.instances = tuple(instances)
        self.splits = {name: tuple(int(i) for i in idx) for name, idx in splits.items()}

        seen = set()
        for name, idx in self.splits.items():
            for i in idx:
                if not 0 <= i < len(self.instances):
                    raise ValueError(f"split {name} references instance {i} out of range")
                if i in seen:
                    raise ValueError("splits must be disjoint")
                seen.add(i)

        for inst in self.instances:
            has_target = inst.target_node is not None
            if has_target != (task == TASK_NODE):
                raise ValueError("target_node must be present exactly for node tasks")
        if task == TASK_NODE and self.instances:
            shared = self.instances[0].graph
            if any(inst.graph is not shared for inst in self.instances):
                raise ValueError("transductive instances must share one graph")

    def split(self, name):
        """List of (index, instance) pairs for a named split."""
        return [(i, self.instances[i]) for i in self.splits[name]]

    def __len__(self):
        return len(self.instances)


def component_label(g, target_node=None):
    """Gold classifier for the synthetic task: component count as 0-based label."""
    return connected_components(g) - 1


def _blob_sizes(rng, total, parts, jitter=1):
    """Near-equal composition of ``total`` into ``parts`` blob sizes.

    Blob sizes staying comparable keeps the per-class degree statistics
    distinguishable at small node counts; ``jitter`` moves single nodes
    between blobs for variety.
    """
    base = total // parts
    sizes = [base + (1 if i < total % parts else 0) for i in range(parts)]
    for _ in range(jitter if parts > 1 else 0):
        a, b = int(rng.integers(parts)), int(rng.integers(parts))
        if sizes[a] > max(3, base - jitter):
            sizes[a] -= 1
            sizes[b] += 1
    return sizes


def _connected_er_edges(rng, size, edge_prob, max_tries=50):
    """Edge list of a connected G(size, p) blob.

    Rejection-samples until connected; p escalates by 1.3x after every
    ``max_tries`` failures so sparse settings cannot stall forever.
    """
    if size == 1:
        return []
    p = min(1.0, edge_prob)
    while True:
        for _ in range(max_tries):
            blob = erdos_renyi(size, p, rng)
            if connected_components(blob) == 1:
                return list(blob.edges)
        p = min(1.0, p * 1.3)


def gen_component_dataset(per_class, size_range=(15, 20), classes=(1, 2, 3),
                          split_sizes=None, seed=0, edge_prob=0.45, size_jitter=1):
    """Balanced synthetic dataset labeled by connected-component count.

    Each graph with class k is built from k disjoint connected ER blobs
    (shared edge probability, near-equal sizes) and a random node
    relabeling; node features are a constant 1.0 scalar so classifiers must
    rely on structure. Labels are re-verified against
    ``connected_components`` before the dataset is returned.
    """
    classes = tuple(sorted(classes))
    if not classes or any(k not in (1, 2, 3) for k in classes):
        raise ValueError("classes must be a non-empty subset of {1, 2, 3}")
    rng = as_rng(seed)
    lo, hi = size_range
    if lo > hi or lo < 3 * max(classes):
        raise ValueError(f"size range {size_range} infeasible for classes {classes}")

    instances = []
    by_class = {k: [] for k in classes}
    for k in classes:
        for _ in range(per_class):
            n = int(rng.integers(lo, hi + 1))
            sizes = _blob_sizes(rng, n, k, size_jitter)
            edges = []
            offset = 0
            for size in sizes:
                for u, v in _connected_er_edges(rng, size, edge_prob):
                    edges.append((u + offset, v + offset))
                offset += size
            perm = rng.permutation(n)
            edges = [(int(perm[u]), int(perm[v])) for u, v in edges]
            g = Graph(n, edges, node_features=np.ones((n, 1)))
            if connected_components(g) != k:
                raise AssertionError("generator produced a mislabeled graph")
            by_class[k].append(len(instances))
            instances.append(DataInstance(g, None, k - 1))

    total = len(instances)
    if split_sizes is None:
        n_test2 = max(len(classes), (total // 10) // len(classes) * len(classes))
        n_test1 = max(len(classes), (total // 5) // len(classes) * len(classes))
        split_sizes = {"train": total - n_test1 - n_test2,
                       "test_I": n_test1, "test_II": n_test2}
    if sum(split_sizes.values()) != total:
        raise ValueError("split sizes must sum to the instance count")
    for name, size in split_sizes.items():
        if size % len(classes) != 0:
            raise ValueError(f"split {name} size {size} not divisible by {len(classes)} classes")

    pools = {k: list(rng.permutation(by_class[k])) for k in classes}
    splits = {}
    for name in SPLIT_NAMES:
        quota = split_sizes.get(name, 0) // len(classes)
        chosen = []
        for k in classes:
            chosen.extend(pools[k][:quota])
            pools[k] = pools[k][quota:]
        splits[name] = [int(i) for i in rng.permutation(chosen)] if chosen else []
    return Dataset(TASK_GRAPH, instances, splits)


def gen_planted_partition(num_nodes=2000, num_classes=4, avg_within_degree=4.0,
                          avg_between_degree=1.0, feature_noise=0.3,
                          split_sizes=None, seed=0):
    """Transductive node-classification testbed: planted communities.

    Nodes belong to balanced blocks; within-block edges are denser than
    between-block ones. Node features are a one-hot of a noise-corrupted
    label, so neighborhood smoothing genuinely helps the classifier.
    """
    rng = as_rng(seed)
    labels = rng.permutation(np.arange(num_nodes) % num_classes)
    block_size = num_nodes / num_classes
    p_in = min(1.0, avg_within_degree / max(block_size - 1, 1))
    p_out = min(1.0, avg_between_degree / max(num_nodes - block_size, 1))

    iu, ju = np.triu_indices(num_nodes, k=1)
    same = labels[iu] == labels[ju]
    probs = np.where(same, p_in, p_out)
    mask = rng.random(iu.shape[0]) < probs
    edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))

    noisy = labels.copy()
    flip = rng.random(num_nodes) < feature_noise
    noisy[flip] = rng.integers(0, num_classes, size=int(flip.sum()))
    features = np.eye(num_classes)[noisy]
    g = Graph(num_nodes, edges, node_features=features)

    if split_sizes is None:
        split_sizes = {"train": 20 * num_classes, "test_I": 50 * num_classes,
                       "test_II": 25 * num_classes}
    need = sum(split_sizes.values())
    if need > num_nodes:
        raise ValueError("split sizes exceed the node count")

    by_class = [list(np.flatnonzero(labels == k)) for k in range(num_classes)]
    for pool in by_class:
        rng.shuffle(pool)
    instances = []
    splits = {}
    for name in SPLIT_NAMES:
        quota = split_sizes.get(name, 0) // num_classes
        idx = []
        for k in range(num_classes):
            for node in by_class[k][:quota]:
                idx.append(len(instances))
                instances.append(DataInstance(g, int(node), int(labels[node])))
            by_class[k] = by_class[k][quota:]
        splits[name] = [int(i) for i in rng.permutation(idx)] if idx else []
    return Dataset(TASK_NODE, instances, splits)


# --- text file formats -------------------------------------------------------
#
# Graph file:   "n <num_nodes> <D_node> <D_edge>"
#               one line of D_node floats per node (omitted when D_node == 0)
#               "e <u> <v> [<D_edge floats>]" per edge
# Manifest:     "# task <task>" header then one
#               "<graph-path> <target-node|-> <label> <split>" line per instance.


def _fmt(x):
    return repr(float(x))


def save_graph(path, g):
    d_node = 0 if g.node_features is None else g.node_features.shape[1]
    d_edge = 0 if g.edge_features is None else g.edge_features.shape[1]
    lines = [f"n {g.num_nodes} {d_node} {d_edge}"]
    if d_node:
        for row in g.node_features:
            lines.append(" ".join(_fmt(x) for x in row))
    for i, (u, v) in enumerate(g.edges):
        line = f"e {u} {v}"
        if d_edge:
            line += " " + " ".join(_fmt(x) for x in g.edge_features[i])
        lines.append(line)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != "n" or len(head) != 4:
        raise ValueError(f"bad graph header in {path}")
    num_nodes, d_node, d_edge = (int(x) for x in head[1:])
    pos = 1
    node_features = None
    if d_node:
        rows = []
        for _ in range(num_nodes):
            vals = [float(x) for x in lines[pos].split()]
            if len(vals) != d_node:
                raise ValueError(f"bad node feature row in {path}")
            rows.append(vals)
            pos += 1
        node_features = np.asarray(rows)
    edges, efeat = [], []
    for ln in lines[pos:]:
        parts = ln.split()
        if parts[0] != "e":
            raise ValueError(f"bad edge line in {path}: {ln!r}")
        edges.append((int(parts[1]), int(parts[2])))
        if d_edge:
            vals = [float(x) for x in parts[3:]]
            if len(vals) != d_edge:
                raise ValueError(f"bad edge feature row in {path}")
            efeat.append(vals)
    edge_features = np.asarray(efeat) if d_edge else None
    return Graph(num_nodes, edges, node_features=node_features, edge_features=edge_features)


def save_dataset(out_dir, dataset, meta=None):
    """Write graph files plus a manifest; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    graph_dir = os.path.join(out_dir, "graphs")
    os.makedirs(graph_dir, exist_ok=True)

    graph_paths = {}
    for inst in dataset.instances:
        if id(inst.graph) not in graph_paths:
            name = f"g{len(graph_paths):05d}.txt"
            save_graph(os.path.join(graph_dir, name), inst.graph)
            graph_paths[id(inst.graph)] = os.path.join("graphs", name)

    split_of = {}
    for name, idx in dataset.splits.items():
        for i in idx:
            split_of[i] = name

    lines = [f"# task {dataset.task}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key} {value}")
    for i, inst in enumerate(dataset.instances):
        target = "-" if inst.target_node is None else str(inst.target_node)
        lines.append(f"{graph_paths[id(inst.graph)]} {target} {inst.label} {split_of.get(i, 'train')}")
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest


def load_dataset(manifest_path):
    base = os.path.dirname(os.path.abspath(manifest_path))
    task = None
    rows = []
    with open(manifest_path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("#"):
                parts = ln[1:].split(None, 1)
                if parts and parts[0] == "task":
                    task = parts[1].strip()
                continue
            rows.append(ln.split())
    if task is None:
        raise ValueError("manifest missing '# task' header")

    cache = {}
    instances = []
    splits = {name: [] for name in SPLIT_NAMES}
    for path, target, label, split in rows:
        if path not in cache:
            cache[path] = load_graph(os.path.join(base, path))
        target_node = None if target == "-" else int(target)
        if split not in splits:
            splits[split] = []
        splits[split].append(len(instances))
        instances.append(DataInstance(cache[path], target_node, int(label)))
    return Dataset(task, instances, splits)

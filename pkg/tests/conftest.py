"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from graphattack.data import gen_component_dataset
from graphattack.gnn import GnnConfig
from graphattack.graph import Graph, erdos_renyi
from graphattack.training import TrainConfig, train


def bfs_component_count(g):
    """Independent flood-fill oracle for connected_components."""
    seen = [False] * g.num_nodes
    adj = {v: [] for v in range(g.num_nodes)}
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    count = 0
    for start in range(g.num_nodes):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    return count


def random_featured_graph(rng, n, p=0.4, feat_dim=2):
    g = erdos_renyi(n, p, rng)
    return Graph(n, g.edges, node_features=rng.normal(size=(n, feat_dim)))


def path_graph(n, feat_dim=None):
    feats = None if feat_dim is None else np.ones((n, feat_dim))
    return Graph(n, [(i, i + 1) for i in range(n - 1)], node_features=feats)


@pytest.fixture(scope="session")
def toy_dataset():
    """Small balanced component-count dataset shared by attack tests."""
    return gen_component_dataset(20, seed=11,
                                 split_sizes={"train": 42, "test_I": 12, "test_II": 6})


@pytest.fixture(scope="session")
def toy_model(toy_dataset):
    cfg = GnnConfig(arch="s2v", propagation_steps=2, embed_dim=16, num_classes=3)
    params, _ = train(toy_dataset, cfg,
                      TrainConfig(lr=0.003, epochs=80, batch_size=16, seed=1,
                                  optimizer="adam"))
    return params, cfg

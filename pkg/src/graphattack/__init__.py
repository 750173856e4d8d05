"""graphattack: adversarial edge-modification attacks on small GNN classifiers.

Subsystems: immutable graphs and synthetic datasets (``graph``, ``data``),
structure2vec / GCN classifiers with analytic gradients (``gnn``,
``training``), attack problem contracts (``attack``), baseline attackers
(``baselines``), the hierarchical Q-learning attacker (``rls2v``) and the
experiment pipelines plus CLI (``harness``, ``cli``).
"""

from .graph import (
    Graph,
    add_edge,
    b_hop_neighborhood,
    connected_components,
    delete_edge,
    erdos_renyi,
    shortest_hop_distance,
    toggle_edge,
)

__all__ = [
    "Graph",
    "add_edge",
    "delete_edge",
    "toggle_edge",
    "shortest_hop_distance",
    "b_hop_neighborhood",
    "connected_components",
    "erdos_renyi",
]

__version__ = "0.1.0"

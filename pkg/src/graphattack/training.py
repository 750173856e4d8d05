"""Target-model training: minibatch gradient descent with optional edge drop.

Edge drop is the defense from the experiments: every training step each edge
of every sampled graph is independently removed with probability
``edge_drop_rate``, re-sampled per step (not per epoch).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gnn
from .data import TASK_GRAPH, TASK_NODE
from .graph import Graph, as_rng


@dataclass
class TrainConfig:
    lr: float = 0.01
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    edge_drop_rate: float = 0.0
    optimizer: str = "sgd"  # "sgd" | "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    drop_draws: int = 0  # number of per-step edge-drop mask samples


def _drop_edges(g, rate, rng):
    keep = rng.random(g.num_edges) >= rate
    edges = tuple(e for e, k in zip(g.edges, keep) if k)
    feats = g.edge_features
    if feats is not None:
        feats = feats[keep]
    return Graph._from_canonical(g.num_nodes, edges, g.node_features, feats)


class _Optimizer:
    def __init__(self, cfg, params):
        self.cfg = cfg
        if cfg.optimizer == "adam":
            self.m = params.zeros_like()
            self.v = params.zeros_like()
            self.t = 0
        elif cfg.optimizer != "sgd":
            raise ValueError(f"unknown optimizer: {cfg.optimizer}")

    def step(self, params, grads):
        cfg = self.cfg
        if cfg.optimizer == "sgd":
            for name in params:
                params[name] = params[name] - cfg.lr * grads[name]
            return
        self.t += 1
        b1, b2 = cfg.adam_beta1, cfg.adam_beta2
        scale = np.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        for name in params:
            self.m[name] = b1 * self.m[name] + (1 - b1) * grads[name]
            self.v[name] = b2 * self.v[name] + (1 - b2) * grads[name] ** 2
            params[name] = params[name] - cfg.lr * scale * self.m[name] / (
                np.sqrt(self.v[name]) + cfg.adam_eps
            )


def train(dataset, cfg, hyper):
    """Train a classifier on the dataset's train split.

    Returns (ParamStore, TrainReport). Deterministic for a fixed seed.
    """
    split = dataset.split("train")
    if not split:
        raise ValueError("training split is empty")
    if (dataset.task == TASK_GRAPH) != (cfg.arch == gnn.ARCH_S2V):
        raise ValueError(f"task {dataset.task} does not match arch {cfg.arch}")

    rng = as_rng(hyper.seed)
    input_dim = split[0][1].graph.node_features.shape[1]
    params = gnn.init_params(cfg, input_dim, rng)
    opt = _Optimizer(hyper, params)
    report = TrainReport()

    indices = np.arange(len(split))
    for _ in range(hyper.epochs):
        rng.shuffle(indices)
        epoch_loss = 0.0
        for start in range(0, len(indices), hyper.batch_size):
            batch = [split[i] for i in indices[start : start + hyper.batch_size]]
            if dataset.task == TASK_NODE:
                g = batch[0][1].graph
                if hyper.edge_drop_rate > 0.0:
                    g = _drop_edges(g, hyper.edge_drop_rate, rng)
                    report.drop_draws += 1
                loss, grads = gnn.gcn_multi_node_gradients(
                    g, [inst.target_node for _, inst in batch],
                    [inst.label for _, inst in batch], params, cfg)
            else:
                loss = 0.0
                grads = params.zeros_like()
                for _, inst in batch:
                    g = inst.graph
                    if hyper.edge_drop_rate > 0.0:
                        g = _drop_edges(g, hyper.edge_drop_rate, rng)
                        report.drop_draws += 1
                    inst_loss, inst_grads = gnn.param_gradients(
                        g, inst.target_node, inst.label, params, cfg)
                    loss += inst_loss / len(batch)
                    for name in grads:
                        grads[name] = grads[name] + inst_grads[name] / len(batch)
            if hyper.lr != 0.0:
                opt.step(params, grads)
            epoch_loss += loss * len(batch)
        report.epoch_losses.append(epoch_loss / len(split))
    return params, report


def accuracy(dataset, split_name, params, cfg):
    """Fraction of split instances whose argmax prediction matches the label."""
    split = dataset.split(split_name)
    if not split:
        return 0.0
    hits = 0
    for _, inst in split:
        pred, _ = gnn.predict(inst.graph, inst.target_node, params, cfg)
        hits += int(pred == inst.label)
    return hits / len(split)

"""Target classifiers: structure2vec (graph-level) and GCN (node-level).

Both models are small and fixed, so forward passes and all gradients are
written out analytically and validated against finite differences in the
test suite. Besides parameter gradients, each model exposes gradients with
respect to per-pair adjacency coefficients: the forward pass is viewed as a
function of a dense symmetric coefficient matrix that equals the binary
adjacency matrix at the evaluation point, which yields a gradient for every
node pair, existing edge or not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import neighbor_sum, weighted_neighbor_sum
from .params import ParamStore

ARCH_S2V = "s2v"
ARCH_GCN = "gcn"


@dataclass(frozen=True)
class GnnConfig:
    arch: str
    propagation_steps: int = 2
    embed_dim: int = 64
    num_classes: int = 3
    pooling: str = "sum"

    def __post_init__(self):
        if self.arch not in (ARCH_S2V, ARCH_GCN):
            raise ValueError(f"unknown arch: {self.arch}")
        if self.propagation_steps < 1 or self.embed_dim < 1:
            raise ValueError("propagation_steps and embed_dim must be >= 1")
        if self.pooling != "sum":
            raise ValueError("only sum pooling is supported")

    def to_meta(self):
        return {"arch": self.arch, "propagation_steps": str(self.propagation_steps),
                "embed_dim": str(self.embed_dim), "num_classes": str(self.num_classes),
                "pooling": self.pooling}

    @classmethod
    def from_meta(cls, meta):
        return cls(arch=meta["arch"], propagation_steps=int(meta["propagation_steps"]),
                   embed_dim=int(meta["embed_dim"]), num_classes=int(meta["num_classes"]),
                   pooling=meta.get("pooling", "sum"))


@dataclass
class EmbeddingState:
    """Per-layer node embeddings plus the caches backprop needs."""

    layers: list = field(default_factory=list)     # mu^(k), k = 0..K
    preacts: list = field(default_factory=list)    # pre-relu activations, k = 1..K
    aggs: list = field(default_factory=list)       # s2v: neighbor sums per layer
    inputs: list = field(default_factory=list)     # gcn: H_k @ W_k per layer
    pooled: np.ndarray | None = None
    logits: np.ndarray | None = None


def glorot(rng, shape):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape)


def init_params(cfg, input_dim, rng):
    d, y, k = cfg.embed_dim, cfg.num_classes, cfg.propagation_steps
    if cfg.arch == ARCH_S2V:
        return ParamStore({
            "w_input": glorot(rng, (d, input_dim)),
            "w_agg": glorot(rng, (d, d)),
            "w_cls": glorot(rng, (y, d)),
            "b_cls": np.zeros(y),
        })
    dims = [input_dim] + [d] * (k - 1) + [y]
    return ParamStore({f"layer_{i}": glorot(rng, (dims[i], dims[i + 1])) for i in range(k)})


def softmax(logits):
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def cross_entropy(logits, label):
    """Softmax cross-entropy via log-sum-exp; label is a class id."""
    if not 0 <= label < logits.shape[-1]:
        raise ValueError(f"label {label} out of range")
    m = np.max(logits)
    return float(m + np.log(np.exp(logits - m).sum()) - logits[label])


def _d_logits(logits, label):
    d = softmax(logits)
    d[label] -= 1.0
    return d


def _require_features(g):
    if g.node_features is None:
        raise ValueError("model requires node features")
    return g.node_features


# --- structure2vec -----------------------------------------------------------


def s2v_propagate(g, w_input, w_agg, steps):
    """Shared S2V embedding iteration; also drives the Q-network embeddings."""
    x = _require_features(g)
    indptr, indices = g.csr()
    base = x @ w_input.T
    n, d = base.shape
    state = EmbeddingState()
    mu = np.zeros((n, d))
    state.layers.append(mu)
    for _ in range(steps):
        agg = neighbor_sum(indptr, indices, mu)
        pre = base + agg @ w_agg.T
        mu = np.maximum(pre, 0.0)
        state.aggs.append(agg)
        state.preacts.append(pre)
        state.layers.append(mu)
    return state


def s2v_propagate_backward(g, state, w_agg, d_mu, want_alpha=False):
    """Backprop through ``s2v_propagate`` from a gradient on the final layer.

    Returns (d_w_input, d_w_agg, d_alpha); d_alpha is the ordered coefficient
    gradient (accumulated over layers) when requested, else None.
    """
    indptr, indices = g.csr()
    x = g.node_features
    steps = len(state.preacts)
    d_base = np.zeros_like(d_mu)
    d_w_agg = np.zeros_like(w_agg)
    d_alpha = np.zeros((x.shape[0], x.shape[0])) if want_alpha else None
    for k in range(steps, 0, -1):
        d_pre = d_mu * (state.preacts[k - 1] > 0.0)
        d_base += d_pre
        d_w_agg += d_pre.T @ state.aggs[k - 1]
        d_agg = d_pre @ w_agg
        if want_alpha:
            d_alpha += d_agg @ state.layers[k - 1].T
        d_mu = neighbor_sum(indptr, indices, d_agg)
    return d_base.T @ x, d_w_agg, d_alpha


def s2v_forward(g, params, cfg):
    """relu(W_in x + W_agg * neighbor-sum) iterated, sum-pooled to logits."""
    state = s2v_propagate(g, params["w_input"], params["w_agg"], cfg.propagation_steps)
    state.pooled = state.layers[-1].sum(axis=0)
    state.logits = params["w_cls"] @ state.pooled + params["b_cls"]
    return state, state.logits


def s2v_forward_alpha(g, alpha, params, cfg):
    """Forward pass with neighbor sums weighted by a dense coefficient matrix.

    With ``alpha`` equal to the binary adjacency matrix this matches
    ``s2v_forward`` up to float associativity.
    """
    x = _require_features(g)
    base = x @ params["w_input"].T
    mu = np.zeros_like(base)
    for _ in range(cfg.propagation_steps):
        mu = np.maximum(base + (alpha @ mu) @ params["w_agg"].T, 0.0)
    return params["w_cls"] @ mu.sum(axis=0) + params["b_cls"]


def _s2v_backward(g, params, cfg, state, d_logits, want_alpha=False):
    n = g.num_nodes
    d_w_cls = np.outer(d_logits, state.pooled)
    d_b_cls = d_logits.copy()
    d_mu = np.tile(params["w_cls"].T @ d_logits, (n, 1))
    d_w_input, d_w_agg, d_alpha = s2v_propagate_backward(
        g, state, params["w_agg"], d_mu, want_alpha=want_alpha)
    grads = ParamStore({
        "w_input": d_w_input,
        "w_agg": d_w_agg,
        "w_cls": d_w_cls,
        "b_cls": d_b_cls,
    })
    return grads, d_alpha


# --- GCN ---------------------------------------------------------------------


def _gcn_prop_weights(g):
    """CSR entry weights and self-loop weights of D^-1/2 (A + I) D^-1/2."""
    indptr, indices = g.csr()
    deg = np.diff(indptr) + 1.0
    inv_sqrt = 1.0 / np.sqrt(deg)
    rows = np.repeat(np.arange(g.num_nodes), np.diff(indptr))
    entry_w = inv_sqrt[rows] * inv_sqrt[indices]
    return indptr, indices, entry_w, 1.0 / deg


def _gcn_prop(indptr, indices, entry_w, self_w, m):
    return weighted_neighbor_sum(indptr, indices, entry_w, m) + self_w[:, None] * m


def gcn_forward(g, params, cfg):
    """Normalized-Laplacian propagation; relu on hidden layers, linear output."""
    x = _require_features(g)
    indptr, indices, entry_w, self_w = _gcn_prop_weights(g)
    state = EmbeddingState()
    h = x
    state.layers.append(h)
    for k in range(cfg.propagation_steps):
        hw = h @ params[f"layer_{k}"]
        z = _gcn_prop(indptr, indices, entry_w, self_w, hw)
        state.inputs.append(hw)
        state.preacts.append(z)
        h = np.maximum(z, 0.0) if k < cfg.propagation_steps - 1 else z
        state.layers.append(h)
    state.logits = h
    return state, state.logits


def _gcn_dense_prop_matrix(alpha):
    a_tilde = alpha + np.eye(alpha.shape[0])
    deg = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return a_tilde * np.outer(inv_sqrt, inv_sqrt), deg


def gcn_forward_alpha(g, alpha, params, cfg):
    """GCN forward where the whole normalization is a function of ``alpha``."""
    x = _require_features(g)
    s, _ = _gcn_dense_prop_matrix(alpha)
    h = x
    for k in range(cfg.propagation_steps):
        z = s @ (h @ params[f"layer_{k}"])
        h = np.maximum(z, 0.0) if k < cfg.propagation_steps - 1 else z
    return h


def _gcn_backward(g, params, cfg, state, d_logits_rows, want_alpha=False):
    indptr, indices, entry_w, self_w = _gcn_prop_weights(g)
    grads = {}
    d_s = None
    if want_alpha:
        d_s = np.zeros((g.num_nodes, g.num_nodes))
    d_z = d_logits_rows
    for k in range(cfg.propagation_steps - 1, -1, -1):
        if want_alpha:
            d_s += d_z @ state.inputs[k].T
        d_hw = _gcn_prop(indptr, indices, entry_w, self_w, d_z)
        grads[f"layer_{k}"] = state.layers[k].T @ d_hw
        if k > 0:
            d_h = d_hw @ params[f"layer_{k}"].T
            d_z = d_h * (state.preacts[k - 1] > 0.0)
    d_alpha = None
    if want_alpha:
        s, deg = _gcn_dense_prop_matrix(g.adjacency_matrix())
        # dL/d(alpha_uv) for the symmetric pair: direct A-tilde term plus the
        # degree-normalization term from d_u and d_v both growing with alpha_uv.
        c = (d_s * s).sum(axis=1) + (d_s * s).sum(axis=0)
        d_alpha = (d_s + d_s.T) / np.sqrt(np.outer(deg, deg))
        d_alpha -= 0.5 * (c / deg)[:, None]
        d_alpha -= 0.5 * (c / deg)[None, :]
        np.fill_diagonal(d_alpha, 0.0)
    return ParamStore(grads), d_alpha


# --- shared entry points ------------------------------------------------------


def forward(g, params, cfg):
    if cfg.arch == ARCH_S2V:
        return s2v_forward(g, params, cfg)
    return gcn_forward(g, params, cfg)


def forward_alpha(g, alpha, params, cfg):
    """Coefficient-matrix forward; returns instance-level logits layout."""
    if cfg.arch == ARCH_S2V:
        return s2v_forward_alpha(g, alpha, params, cfg)
    return gcn_forward_alpha(g, alpha, params, cfg)


def instance_logits(logits, target_node):
    return logits if target_node is None else logits[target_node]


def predict(g, target_node, params, cfg):
    """(argmax class, softmax confidence); ties break to the lowest class id."""
    _, logits = forward(g, params, cfg)
    logits = instance_logits(logits, target_node)
    conf = softmax(logits)
    return int(np.argmax(logits)), conf


def instance_loss(g, target_node, label, params, cfg):
    _, logits = forward(g, params, cfg)
    return cross_entropy(instance_logits(logits, target_node), label)


def param_gradients(g, target_node, label, params, cfg):
    """Analytic dL/dtheta for one instance; returns (loss, ParamStore)."""
    state, logits = forward(g, params, cfg)
    inst = instance_logits(logits, target_node)
    loss = cross_entropy(inst, label)
    if cfg.arch == ARCH_S2V:
        grads, _ = _s2v_backward(g, params, cfg, state, _d_logits(inst, label))
    else:
        rows = np.zeros_like(logits)
        rows[target_node] = _d_logits(inst, label)
        grads, _ = _gcn_backward(g, params, cfg, state, rows)
    return loss, grads


def gcn_multi_node_gradients(g, nodes, labels, params, cfg):
    """Mean loss and gradients over several target nodes in one backward pass."""
    state, logits = forward(g, params, cfg)
    rows = np.zeros_like(logits)
    total = 0.0
    for c, y in zip(nodes, labels):
        total += cross_entropy(logits[c], y)
        rows[c] += _d_logits(logits[c], y) / len(nodes)
    grads, _ = _gcn_backward(g, params, cfg, state, rows)
    return total / len(nodes), grads


def alpha_gradients(g, target_node, label, params, cfg, node_limit=512):
    """Symmetric matrix of dL/d(coefficient) over all unordered node pairs.

    Evaluated at coefficients equal to the binary adjacency matrix; for GCN
    the gradient flows through the full degree normalization.
    """
    if g.num_nodes > node_limit:
        raise ValueError(
            f"alpha gradient is O(|V|^2); graph has {g.num_nodes} nodes, limit {node_limit}"
        )
    state, logits = forward(g, params, cfg)
    inst = instance_logits(logits, target_node)
    if cfg.arch == ARCH_S2V:
        _, d_alpha = _s2v_backward(g, params, cfg, state, _d_logits(inst, label),
                                   want_alpha=True)
        d_alpha = d_alpha + d_alpha.T
        np.fill_diagonal(d_alpha, 0.0)
        return d_alpha
    rows = np.zeros_like(logits)
    rows[target_node] = _d_logits(inst, label)
    _, d_alpha = _gcn_backward(g, params, cfg, state, rows, want_alpha=True)
    return d_alpha

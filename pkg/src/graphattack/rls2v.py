"""Hierarchical Q-learning attacker over edge toggles.

An attack episode is a fixed-length MDP: the agent picks an edge per step by
choosing its two endpoints sequentially (two linear-size decisions instead
of one quadratic one), edges toggle (existing pair deletes, missing pair
adds), and a designated dummy slot is a budget-consuming no-op so fewer than
the budget of real edits can be expressed. Reward arrives only at the end:
+1/-1 by prediction label, or the model loss when confidence is available.
Two S2V-parameterized scoring networks are shared across all time steps and
all instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import Modification, ThreatModel, apply_guarded, toggle_modification
from .gnn import s2v_propagate, s2v_propagate_backward
from .graph import as_rng, b_hop_neighborhood
from .params import ParamStore
from .training import TrainConfig, _Optimizer

TASK_GRAPH_ATTACK = "graph"
TASK_NODE_ATTACK = "node"


class NoValidActionError(RuntimeError):
    """Every candidate action is masked out."""


@dataclass(frozen=True)
class MdpState:
    """Current (possibly partially modified) graph plus the step index."""

    graph: object
    target_node: int | None
    step: int


@dataclass(frozen=True)
class HierAction:
    """Edge action decomposed into two endpoint choices.

    ``first == second == dummy index`` encodes the no-op; otherwise the kind
    is resolved by toggle semantics against the state graph.
    """

    first: int
    second: int
    kind: str  # "add" | "delete" | "noop"


@dataclass(frozen=True)
class Transition:
    state: MdpState
    action: HierAction
    reward: float
    next_state: MdpState
    terminal: bool


class AttackEnv:
    """Budgeted edge-toggle MDP for one instance under one indicator."""

    def __init__(self, instance, ind, budget):
        self.instance = instance
        self.original = instance.graph
        self.target_node = instance.target_node
        self.label = instance.label
        self.ind = ind
        self.budget = budget
        self._seconds_cache = {}
        self._firsts_cache = {}

    def initial_state(self):
        return MdpState(self.original, self.target_node, 1)

    def dummy_index(self, state):
        return state.graph.num_nodes

    def is_terminal(self, state):
        return state.step > self.budget

    def valid_seconds(self, state, first):
        """Boolean mask over n+1 candidate second endpoints (last = dummy)."""
        key = (state.graph, first)
        cached = self._seconds_cache.get(key)
        if cached is not None:
            return cached
        n = state.graph.num_nodes
        mask = np.zeros(n + 1, dtype=bool)
        if first == n:
            mask[n] = True
        else:
            for v in range(n):
                if v == first:
                    continue
                mod = toggle_modification(state.graph, first, v)
                _, applied = apply_guarded(self.ind, self.original, state.graph,
                                           mod, self.target_node)
                mask[v] = applied
        self._seconds_cache[key] = mask
        return mask

    def valid_firsts(self, state):
        """Candidate first endpoints with at least one valid completion."""
        cached = self._firsts_cache.get(state.graph)
        if cached is not None:
            return cached
        n = state.graph.num_nodes
        firsts = [v for v in range(n) if self.valid_seconds(state, v).any()]
        firsts.append(n)  # the no-op is always available
        self._firsts_cache[state.graph] = firsts
        return firsts

    def step(self, state, action):
        if action.kind == "noop":
            graph = state.graph
        else:
            mod = Modification(action.kind, action.first, action.second)
            graph, applied = apply_guarded(self.ind, self.original, state.graph,
                                           mod, self.target_node)
            if not applied:
                raise NoValidActionError(f"masked action slipped through: {action}")
        return MdpState(graph, state.target_node, state.step + 1)


@dataclass(frozen=True)
class QNetConfig:
    task: str
    embed_dim: int = 32
    propagation_steps: int = 2
    hidden_dim: int = 32
    ball_hops: int | None = None  # node task: hop radius of the state summary

    def __post_init__(self):
        if self.task not in (TASK_GRAPH_ATTACK, TASK_NODE_ATTACK):
            raise ValueError(f"unknown attack task: {self.task}")
        if self.task == TASK_NODE_ATTACK and self.ball_hops is None:
            raise ValueError("node-attack Q-networks need ball_hops")

    @property
    def state_dim(self):
        return self.embed_dim * (2 if self.task == TASK_NODE_ATTACK else 1)


def _init_half(cfg, input_dim, extra_nodes, rng):
    from .gnn import glorot

    d, h = cfg.embed_dim, cfg.hidden_dim
    z_dim = d * extra_nodes + cfg.state_dim
    return ParamStore({
        "s2v_input": glorot(rng, (d, input_dim)),
        "s2v_agg": glorot(rng, (d, d)),
        "mix": glorot(rng, (z_dim, h)),
        "mix_b": np.zeros(h),
        "score": glorot(rng, (h, 1))[:, 0],
        "score_b": np.zeros(1),
    })


class QNetworks:
    """First- and second-endpoint scorers with their own S2V embeddings."""

    def __init__(self, cfg, params1, params2):
        self.cfg = cfg
        self.params1 = params1
        self.params2 = params2
        self.q1_evals = 0  # candidate scorings, for the linear-cost assertion
        self.q2_evals = 0

    @classmethod
    def init(cls, cfg, input_dim, seed):
        rng = as_rng(seed)
        return cls(cfg, _init_half(cfg, input_dim, 1, rng),
                   _init_half(cfg, input_dim, 2, rng))

    def clone(self):
        twin = QNetworks(self.cfg, self.params1.copy(), self.params2.copy())
        return twin


def _embed(state, params, cfg):
    return s2v_propagate(state.graph, params["s2v_input"], params["s2v_agg"],
                         cfg.propagation_steps)


def _state_vector(state, mu, cfg):
    if cfg.task == TASK_GRAPH_ATTACK:
        return mu.sum(axis=0), None
    ball = sorted(b_hop_neighborhood(state.graph, state.target_node, cfg.ball_hops))
    return np.concatenate([mu[ball].sum(axis=0), mu[state.target_node]]), ball


def state_embedding(state, q):
    """State summary vector: embedding sum (graph attack) or
    [ball sum, target embedding] (node attack), on the current graph."""
    mu = _embed(state, q.params1, q.cfg).layers[-1]
    vec, _ = _state_vector(state, mu, q.cfg)
    return vec


def _candidate_matrix(mu):
    """Node embeddings plus the zero row standing in for the dummy slot."""
    return np.vstack([mu, np.zeros((1, mu.shape[1]))])


def q1_scores(state, q):
    """Score every candidate first endpoint (index n = dummy)."""
    mu = _embed(state, q.params1, q.cfg).layers[-1]
    s, _ = _state_vector(state, mu, q.cfg)
    cand = _candidate_matrix(mu)
    z = np.hstack([cand, np.tile(s, (cand.shape[0], 1))])
    hidden = np.maximum(z @ q.params1["mix"] + q.params1["mix_b"], 0.0)
    q.q1_evals += cand.shape[0]
    return hidden @ q.params1["score"] + q.params1["score_b"][0]


def q2_scores(state, first, q):
    """Score every candidate second endpoint given the first (index n = dummy)."""
    mu = _embed(state, q.params2, q.cfg).layers[-1]
    s, _ = _state_vector(state, mu, q.cfg)
    n = mu.shape[0]
    mu_first = mu[first] if first < n else np.zeros(mu.shape[1])
    cand = _candidate_matrix(mu)
    z = np.hstack([np.tile(mu_first, (cand.shape[0], 1)), cand,
                   np.tile(s, (cand.shape[0], 1))])
    hidden = np.maximum(z @ q.params2["mix"] + q.params2["mix_b"], 0.0)
    q.q2_evals += cand.shape[0]
    return hidden @ q.params2["score"] + q.params2["score_b"][0]


def _masked_argmax(scores, mask):
    masked = np.where(mask, scores, -np.inf)
    if not mask.any():
        raise NoValidActionError("no valid action")
    return int(np.argmax(masked)), masked


def _resolve(env, state, first, second):
    n = state.graph.num_nodes
    if first == n:
        return HierAction(first, second, "noop")
    kind = "delete" if state.graph.has_edge(first, second) else "add"
    return HierAction(first, second, kind)


def greedy_action(state, env, q, compose_q1=False):
    """Hierarchical argmax; ties break to the lowest node id, dummy last.

    ``compose_q1`` replaces the learned first-level scores by the exact
    max over second-level scores, the composition the Bellman recursion
    defines; used for the flat-argmax consistency checks.
    """
    firsts = env.valid_firsts(state)
    n = state.graph.num_nodes
    first_mask = np.zeros(n + 1, dtype=bool)
    first_mask[firsts] = True
    if compose_q1:
        scores1 = np.full(n + 1, -np.inf)
        for a1 in firsts:
            s2 = q2_scores(state, a1, q)
            _, masked = _masked_argmax(s2, env.valid_seconds(state, a1))
            scores1[a1] = masked.max()
        first, _ = _masked_argmax(scores1, first_mask)
    else:
        first, _ = _masked_argmax(q1_scores(state, q), first_mask)
    second, _ = _masked_argmax(q2_scores(state, first, q),
                               env.valid_seconds(state, first))
    return _resolve(env, state, first, second)


def epsilon_greedy_action(state, env, q, epsilon, rng):
    if rng.random() < epsilon:
        firsts = env.valid_firsts(state)
        first = int(firsts[int(rng.integers(len(firsts)))])
        seconds = np.flatnonzero(env.valid_seconds(state, first))
        second = int(seconds[int(rng.integers(len(seconds)))])
        return _resolve(env, state, first, second)
    return greedy_action(state, env, q)


def terminal_reward(handle, graph, target_node, label, reward_kind):
    if reward_kind == "label":
        return 1.0 if handle.predict_label(graph, target_node) != label else -1.0
    if reward_kind == "loss":
        return float(handle.loss_value(graph, target_node, label))
    return 0.0  # transfer rollouts never query


def rollout(env, q, epsilon, rng, handle=None, reward_kind="label"):
    """Play exactly ``budget`` hierarchical actions; reward only at the end."""
    state = env.initial_state()
    transitions = []
    for t in range(1, env.budget + 1):
        action = epsilon_greedy_action(state, env, q, epsilon, rng)
        next_state = env.step(state, action)
        terminal = t == env.budget
        reward = 0.0
        if terminal and handle is not None:
            reward = terminal_reward(handle, next_state.graph, env.target_node,
                                     env.label, reward_kind)
        transitions.append(Transition(state, action, reward, next_state, terminal))
        state = next_state
    return transitions, state.graph


# --- value/gradient plumbing for the TD updates -------------------------------


def _scalar_q_grads(state, params, cfg, picked, extra_nodes):
    """Value and parameter gradients of one Q score.

    ``picked`` lists the endpoint slots (dummy encoded as n); gradients flow
    into the chosen node embeddings and the state summary, then back through
    the S2V iteration.
    """
    prop = _embed(state, params, cfg)
    mu = prop.layers[-1]
    n, d = mu.shape
    s, ball = _state_vector(state, mu, cfg)
    zs = [mu[i] if i < n else np.zeros(d) for i in picked]
    z = np.concatenate(zs + [s])
    h_pre = z @ params["mix"] + params["mix_b"]
    h = np.maximum(h_pre, 0.0)
    value = float(h @ params["score"] + params["score_b"][0])

    d_h = params["score"] * (h_pre > 0.0)
    d_score = h
    d_mix = np.outer(z, d_h)
    d_z = params["mix"] @ d_h

    d_mu = np.zeros_like(mu)
    for slot, i in enumerate(picked):
        if i < n:
            d_mu[i] += d_z[slot * d : (slot + 1) * d]
    d_s = d_z[extra_nodes * d :]
    if cfg.task == TASK_GRAPH_ATTACK:
        d_mu += d_s[None, :]
    else:
        d_mu[ball] += d_s[:d][None, :]
        d_mu[state.target_node] += d_s[d:]
    d_w_input, d_w_agg, _ = s2v_propagate_backward(state.graph, prop,
                                                   params["s2v_agg"], d_mu)
    grads = ParamStore({"s2v_input": d_w_input, "s2v_agg": d_w_agg,
                        "mix": d_mix, "mix_b": d_h, "score": d_score,
                        "score_b": np.ones(1)})
    return value, grads


def q1_value_grads(state, first, q):
    return _scalar_q_grads(state, q.params1, q.cfg, [first], 1)


def q2_value_grads(state, first, second, q):
    return _scalar_q_grads(state, q.params2, q.cfg, [first, second], 2)


def td_targets(env, transition, q):
    """Regression targets for both decision levels of one transition.

    Level-2 target: terminal reward, else the best level-1 score of the next
    state. Level-1 target: the best masked level-2 score in the same state
    for the taken first endpoint (discount fixed to 1).
    """
    if transition.terminal:
        y2 = transition.reward
    else:
        nxt = transition.next_state
        firsts = env.valid_firsts(nxt)
        mask = np.zeros(nxt.graph.num_nodes + 1, dtype=bool)
        mask[firsts] = True
        _, masked = _masked_argmax(q1_scores(nxt, q), mask)
        y2 = float(masked.max())
    s2 = q2_scores(transition.state, transition.action.first, q)
    _, masked2 = _masked_argmax(s2, env.valid_seconds(transition.state,
                                                      transition.action.first))
    y1 = float(masked2.max())
    return y1, y2


@dataclass
class QLearnConfig:
    episodes: int = 3000
    lr: float = 0.001
    batch_size: int = 64
    replay_capacity: int = 50_000
    target_sync: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    updates_per_episode: int = 1
    optimizer: str = "adam"
    reward: str = "label"  # "label" (PBA-D) | "loss" (PBA-C)
    seed: int = 0

    def epsilon(self, episode):
        horizon = max(1, int(self.episodes * self.eps_decay_fraction))
        frac = min(1.0, episode / horizon)
        return self.eps_start + (self.eps_end - self.eps_start) * frac


@dataclass
class QLearnReport:
    episode_rewards: list = field(default_factory=list)
    updates: int = 0


def q_learning_train(instances, handle, ind, budget, qcfg, learn_cfg,
                     input_dim=None):
    """Fit one shared pair of Q-networks across all instance MDPs.

    Returns (QNetworks, QLearnReport); deterministic for a fixed seed.
    """
    if not instances:
        raise ValueError("no instances to train on")
    rng = as_rng(learn_cfg.seed)
    if input_dim is None:
        input_dim = instances[0].graph.node_features.shape[1]
    q = QNetworks.init(qcfg, input_dim, rng)
    target = q.clone()
    envs = [AttackEnv(inst, ind, budget) for inst in instances]

    opt_cfg = TrainConfig(lr=learn_cfg.lr, optimizer=learn_cfg.optimizer)
    opt1 = _Optimizer(opt_cfg, q.params1)
    opt2 = _Optimizer(opt_cfg, q.params2)

    replay = []
    write_pos = 0
    report = QLearnReport()
    order = rng.permutation(len(envs))
    for episode in range(learn_cfg.episodes):
        if episode % len(envs) == 0:
            order = rng.permutation(len(envs))
        env = envs[order[episode % len(envs)]]
        transitions, _ = rollout(env, q, learn_cfg.epsilon(episode), rng,
                                 handle=handle, reward_kind=learn_cfg.reward)
        report.episode_rewards.append(transitions[-1].reward)
        for tr in transitions:
            item = (env, tr)
            if len(replay) < learn_cfg.replay_capacity:
                replay.append(item)
            else:
                replay[write_pos] = item
                write_pos = (write_pos + 1) % learn_cfg.replay_capacity

        for _ in range(learn_cfg.updates_per_episode):
            if len(replay) < learn_cfg.batch_size:
                continue
            picks = rng.integers(len(replay), size=learn_cfg.batch_size)
            g1 = q.params1.zeros_like()
            g2 = q.params2.zeros_like()
            for i in picks:
                env_i, tr = replay[int(i)]
                y1, y2 = td_targets(env_i, tr, target)
                v1, grads1 = q1_value_grads(tr.state, tr.action.first, q)
                v2, grads2 = q2_value_grads(tr.state, tr.action.first,
                                            tr.action.second, q)
                c1 = 2.0 * (v1 - y1) / learn_cfg.batch_size
                c2 = 2.0 * (v2 - y2) / learn_cfg.batch_size
                for name in g1:
                    g1[name] = g1[name] + c1 * grads1[name]
                for name in g2:
                    g2[name] = g2[name] + c2 * grads2[name]
            if learn_cfg.lr != 0.0:
                opt1.step(q.params1, g1)
                opt2.step(q.params2, g2)
            report.updates += 1
            if report.updates % learn_cfg.target_sync == 0:
                target = q.clone()
    return q, report


class RlS2vAttacker:
    """Greedy policy of trained Q-networks; needs no model access at run time."""

    name = "rls2v"
    supported_threats = frozenset({ThreatModel.PBA_C, ThreatModel.PBA_D,
                                   ThreatModel.RBA})

    def __init__(self, qnets):
        self.qnets = qnets

    def run(self, instance, handle, ind, budget, rng):
        env = AttackEnv(instance, ind, budget)
        state = env.initial_state()
        mods = []
        for _ in range(budget):
            action = greedy_action(state, env, self.qnets)
            if action.kind != "noop":
                mods.append(Modification(action.kind, action.first, action.second))
            state = env.step(state, action)
        return mods


def save_qnetworks(path, q, meta=None):
    from .params import save_params

    tensors = {f"q1/{k}": v for k, v in q.params1.items()}
    tensors.update({f"q2/{k}": v for k, v in q.params2.items()})
    all_meta = {"task": q.cfg.task, "embed_dim": str(q.cfg.embed_dim),
                "propagation_steps": str(q.cfg.propagation_steps),
                "hidden_dim": str(q.cfg.hidden_dim),
                "ball_hops": str(q.cfg.ball_hops)}
    all_meta.update(meta or {})
    save_params(path, ParamStore(tensors), all_meta)


def load_qnetworks(path):
    from .params import load_params

    store, meta = load_params(path)
    ball = None if meta["ball_hops"] == "None" else int(meta["ball_hops"])
    cfg = QNetConfig(task=meta["task"], embed_dim=int(meta["embed_dim"]),
                     propagation_steps=int(meta["propagation_steps"]),
                     hidden_dim=int(meta["hidden_dim"]), ball_hops=ball)
    p1 = ParamStore({k[3:]: v for k, v in store.items() if k.startswith("q1/")})
    p2 = ParamStore({k[3:]: v for k, v in store.items() if k.startswith("q2/")})
    return QNetworks(cfg, p1, p2), meta

"""Attack problem contracts shared by every attacker.

Covers the equivalency indicators that decide which modified graphs count
as "the same instance", guarded modification application, threat-model
capability gating with exact query counting, and the evaluation protocol
(attack only what the clean model classifies correctly; judge outcomes with
an unrestricted oracle afterwards).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gnn
from .graph import add_edge, b_hop_neighborhood, delete_edge, shortest_hop_distance


class ThreatModelViolation(RuntimeError):
    """An attacker asked for information its threat level does not grant."""


class ConstraintViolation(RuntimeError):
    """A recorded outcome broke its equivalency indicator (harness assertion)."""


class ThreatModel:
    WBA = "WBA"
    PBA_C = "PBA-C"
    PBA_D = "PBA-D"
    RBA = "RBA"

    ALL = (WBA, PBA_C, PBA_D, RBA)

    @staticmethod
    def allows_queries(level):
        return level != ThreatModel.RBA

    @staticmethod
    def allows_confidence(level):
        return level in (ThreatModel.WBA, ThreatModel.PBA_C)

    @staticmethod
    def allows_gradients(level):
        return level == ThreatModel.WBA


@dataclass(frozen=True, order=True)
class Modification:
    """A single edge add/delete with canonical endpoints."""

    kind: str
    u: int
    v: int

    def __post_init__(self):
        if self.kind not in ("add", "delete"):
            raise ValueError(f"unknown modification kind: {self.kind}")
        if self.u == self.v or self.u < 0 or self.v < 0:
            raise ValueError(f"bad endpoints: ({self.u}, {self.v})")
        if self.u > self.v:
            lo, hi = self.v, self.u
            object.__setattr__(self, "u", lo)
            object.__setattr__(self, "v", hi)

    @property
    def pair(self):
        return (self.u, self.v)

    def to_dict(self):
        return {"kind": self.kind, "u": self.u, "v": self.v}


@dataclass(frozen=True)
class ExplicitIndicator:
    """Equivalent iff a gold-standard classifier labels both graphs alike."""

    gold: object  # callable (graph, target_node) -> label

    def describe(self):
        return "explicit"


@dataclass(frozen=True)
class SmallModIndicator:
    """At most ``max_modifications`` toggled edges, all inside a b-hop region.

    The hop region is measured on the original graph: with a target node the
    endpoints of every toggled edge must lie in its b-hop ball, otherwise the
    two endpoints must be within b hops of each other.
    """

    max_modifications: int
    hops: int

    def __post_init__(self):
        if self.max_modifications < 1 or self.hops < 1:
            raise ValueError("budget and hop bound must be >= 1")

    def describe(self):
        return f"smallmod(m={self.max_modifications},b={self.hops})"


def modified_pairs(g_orig, g_mod):
    """Symmetric difference of the edge sets, as sorted canonical pairs."""
    before = g_orig._edge_set
    after = g_mod._edge_set
    return sorted(before.symmetric_difference(after))


def check_equivalency(ind, g_orig, g_mod, target_node=None):
    """True when ``g_mod`` is still "the same instance" as ``g_orig``."""
    if g_orig.num_nodes != g_mod.num_nodes:
        raise ValueError("graphs must share the node set")
    if isinstance(ind, ExplicitIndicator):
        return ind.gold(g_orig, target_node) == ind.gold(g_mod, target_node)
    diff = modified_pairs(g_orig, g_mod)
    if len(diff) > ind.max_modifications:
        return False
    if not diff:
        return True
    if target_node is not None:
        ball = b_hop_neighborhood(g_orig, target_node, ind.hops)
        return all(u in ball and v in ball for u, v in diff)
    for u, v in diff:
        d = shortest_hop_distance(g_orig, u, v)
        if d is None or d > ind.hops:
            return False
    return True


def apply_guarded(ind, g_orig, g_current, mod, target_node=None):
    """Apply ``mod`` only when the result stays equivalent to ``g_orig``.

    Returns (graph, applied). Rejection is a value, not an error; a
    structurally void modification (adding a present edge, deleting a
    missing one) is also rejected.
    """
    if mod.kind == "add":
        candidate, changed = add_edge(g_current, mod.u, mod.v)
    else:
        candidate, changed = delete_edge(g_current, mod.u, mod.v)
    if not changed:
        return g_current, False
    if check_equivalency(ind, g_orig, candidate, target_node):
        return candidate, True
    return g_current, False


def toggle_modification(g, u, v):
    """Modification whose kind flips the pair's existence in ``g``."""
    return Modification("delete" if g.has_edge(u, v) else "add", u, v)


@dataclass
class AttackOutcome:
    """Per-instance record of what an attacker did and whether it worked."""

    instance_id: int
    label: int
    modifications: tuple
    original_prediction: int
    final_prediction: int
    success: bool
    queries_used: int

    def to_dict(self):
        return {
            "instance": self.instance_id,
            "label": self.label,
            "modifications": [m.to_dict() for m in self.modifications],
            "original_prediction": self.original_prediction,
            "final_prediction": self.final_prediction,
            "success": self.success,
            "queries_used": self.queries_used,
        }


class ModelHandle:
    """Capability-gated view of a trained classifier.

    Every successful call counts as exactly one query; calls outside the
    threat level raise ThreatModelViolation (RBA rejects everything).
    """

    def __init__(self, params, cfg, threat):
        if threat not in ThreatModel.ALL:
            raise ValueError(f"unknown threat level: {threat}")
        self._params = params
        self._cfg = cfg
        self.threat = threat
        self.query_count = 0

    @property
    def num_classes(self):
        return self._cfg.num_classes

    def _gate(self, allowed, what):
        if not allowed:
            raise ThreatModelViolation(f"{what} not available under {self.threat}")
        self.query_count += 1

    def predict_label(self, g, target_node=None):
        self._gate(ThreatModel.allows_queries(self.threat), "label query")
        pred, _ = gnn.predict(g, target_node, self._params, self._cfg)
        return pred

    def predict_confidence(self, g, target_node=None):
        self._gate(ThreatModel.allows_confidence(self.threat), "confidence query")
        _, conf = gnn.predict(g, target_node, self._params, self._cfg)
        return conf

    def loss_value(self, g, target_node, label):
        self._gate(ThreatModel.allows_confidence(self.threat), "loss query")
        return gnn.instance_loss(g, target_node, label, self._params, self._cfg)

    def gradients_wrt_edges(self, g, target_node, label, node_limit=512):
        self._gate(ThreatModel.allows_gradients(self.threat), "gradient query")
        return gnn.alpha_gradients(g, target_node, label, self._params, self._cfg,
                                   node_limit=node_limit)


@dataclass
class EvaluationReport:
    method: str
    threat: str
    split: str
    clean_accuracy: float
    attacked_accuracy: float
    outcomes: list = field(default_factory=list)

    @property
    def accuracy_drop(self):
        return self.clean_accuracy - self.attacked_accuracy


def evaluate_attack(attacker, dataset, split_name, params, cfg, ind, threat,
                    budget, seed=0):
    """Run an attacker over a split and validate every outcome.

    Only instances the clean model classifies correctly are attacked;
    already-misclassified ones count as attacker successes at zero cost.
    Each attacked instance gets its own deterministic RNG stream, a fresh
    capability-gated handle, and a post-hoc constraint check of the whole
    recorded modification list.
    """
    if threat not in attacker.supported_threats:
        raise ThreatModelViolation(
            f"{attacker.name} is not applicable under {threat} "
            f"(supported: {sorted(attacker.supported_threats)})"
        )
    split = dataset.split(split_name)
    streams = np.random.SeedSequence(seed).spawn(len(split))
    outcomes = []
    clean_hits = 0
    final_hits = 0
    for (idx, inst), stream in zip(split, streams):
        clean_pred, _ = gnn.predict(inst.graph, inst.target_node, params, cfg)
        if clean_pred != inst.label:
            outcomes.append(AttackOutcome(idx, inst.label, (), clean_pred,
                                          clean_pred, True, 0))
            continue
        clean_hits += 1
        handle = ModelHandle(params, cfg, threat)
        mods = attacker.run(inst, handle, ind, budget, np.random.default_rng(stream))
        mods = tuple(mods)

        if len(mods) > budget:
            raise ConstraintViolation(
                f"{attacker.name} returned {len(mods)} modifications for budget {budget}")
        g = inst.graph
        for mod in mods:
            g, applied = apply_guarded(ind, inst.graph, g, mod, inst.target_node)
            if not applied:
                raise ConstraintViolation(
                    f"{attacker.name} recorded an invalid modification {mod}")
        if threat == ThreatModel.RBA and handle.query_count != 0:
            raise ThreatModelViolation(f"{attacker.name} queried the model under RBA")

        final_pred, _ = gnn.predict(g, inst.target_node, params, cfg)
        success = final_pred != inst.label
        final_hits += int(not success)
        outcomes.append(AttackOutcome(idx, inst.label, mods, clean_pred,
                                      final_pred, success, handle.query_count))
    total = max(len(split), 1)
    return EvaluationReport(attacker.name, threat, split_name,
                            clean_hits / total, final_hits / total, outcomes)

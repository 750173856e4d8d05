"""Baseline attackers: random sampling, gradient argmax, genetic search,
and the exhaustive sanity-check oracle.

Every attacker implements ``run(instance, handle, ind, budget, rng)`` and
returns the list of modifications it committed to; the evaluation harness
re-validates them and judges success. Attackers are deterministic given the
rng stream they receive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .attack import (
    Modification,
    SmallModIndicator,
    ThreatModel,
    apply_guarded,
    toggle_modification,
)
from .graph import b_hop_neighborhood


def candidate_pairs(g, ind, target_node):
    """Sorted node pairs an attack may legally touch.

    Under a small-modification indicator with a target node only pairs
    inside the b-hop ball can ever validate, so the pool is restricted up
    front; otherwise every unordered pair is a candidate.
    """
    if isinstance(ind, SmallModIndicator) and target_node is not None:
        ball = sorted(b_hop_neighborhood(g, target_node, ind.hops))
        return [(u, v) for i, u in enumerate(ball) for v in ball[i + 1 :]]
    return [(u, v) for u in range(g.num_nodes) for v in range(u + 1, g.num_nodes)]


def sample_valid_toggle(rng, g_orig, g_current, ind, target_node, pool=None):
    """Uniform draw from the currently valid toggles; None when there are none.

    Rejection sampling against the full pool, falling back to a permutation
    scan so a single remaining legal modification is still found.
    """
    if pool is None:
        pool = candidate_pairs(g_orig, ind, target_node)
    if not pool:
        return None
    for _ in range(min(4 * len(pool), 2000)):
        u, v = pool[int(rng.integers(len(pool)))]
        mod = toggle_modification(g_current, u, v)
        g_next, applied = apply_guarded(ind, g_orig, g_current, mod, target_node)
        if applied:
            return g_next, mod
    for i in rng.permutation(len(pool)):
        u, v = pool[int(i)]
        mod = toggle_modification(g_current, u, v)
        g_next, applied = apply_guarded(ind, g_orig, g_current, mod, target_node)
        if applied:
            return g_next, mod
    return None


class RandSamplingAttack:
    """Uniformly random edge toggles, filtered through the indicator.

    Needs no target-model access at all, so it runs under PBA-D and RBA.
    """

    name = "rand"
    supported_threats = frozenset({ThreatModel.PBA_D, ThreatModel.RBA})

    def run(self, instance, handle, ind, budget, rng):
        g = instance.graph
        current = g
        pool = candidate_pairs(g, ind, instance.target_node)
        mods = []
        for _ in range(budget):
            drawn = sample_valid_toggle(rng, g, current, ind, instance.target_node, pool)
            if drawn is None:
                break
            current, mod = drawn
            mods.append(mod)
        return mods


class GradArgmaxAttack:
    """White-box greedy selection by adjacency-coefficient gradient magnitude.

    Pairs are ranked by |dL/d(coefficient)|; the sign decides add (positive
    gradient on a non-edge) versus delete (negative gradient on an existing
    edge), pairs where the sign rule is inapplicable are skipped. By default
    gradients are recomputed after each accepted edit; ``one_shot`` ranks
    once on the original graph.
    """

    name = "gradargmax"
    supported_threats = frozenset({ThreatModel.WBA})

    def __init__(self, one_shot=False, node_limit=512):
        self.one_shot = one_shot
        self.node_limit = node_limit

    def _ranked_pairs(self, grad):
        n = grad.shape[0]
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if grad[u, v] != 0.0]
        pairs.sort(key=lambda p: (-abs(grad[p[0], p[1]]), p))
        return pairs

    def run(self, instance, handle, ind, budget, rng):
        g = instance.graph
        c, y = instance.target_node, instance.label
        current = g
        mods = []
        grad = None
        for _ in range(budget):
            if grad is None or not self.one_shot:
                grad = handle.gradients_wrt_edges(current, c, y, node_limit=self.node_limit)
            accepted = False
            for u, v in self._ranked_pairs(grad):
                value = grad[u, v]
                exists = current.has_edge(u, v)
                if value < 0.0 and exists:
                    mod = Modification("delete", u, v)
                elif value > 0.0 and not exists:
                    mod = Modification("add", u, v)
                else:
                    continue
                if mods and mod.pair in {m.pair for m in mods}:
                    continue
                candidate, applied = apply_guarded(ind, g, current, mod, c)
                if applied:
                    current = candidate
                    mods.append(mod)
                    accepted = True
                    break
            if not accepted:
                break
        return mods


@dataclass
class GeneticConfig:
    population_size: int = 100
    rounds: int = 10
    crossover_rate: float = 0.3
    mutation_rate: float = 0.2
    selection: str = "weighted"  # "weighted" | "greedy"
    elitism: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must be in [0, 1]")
        if self.selection not in ("weighted", "greedy"):
            raise ValueError(f"unknown selection: {self.selection}")


def crossover(rng, mods_a, mods_b, rate):
    """Child keeps the intersection plus a random subset of each difference."""
    set_a, set_b = set(mods_a), set(mods_b)
    child = set_a & set_b
    for mod in sorted(set_a - set_b):
        if rng.random() < rate:
            child.add(mod)
    for mod in sorted(set_b - set_a):
        if rng.random() < rate:
            child.add(mod)
    return tuple(sorted(child))


def mutate(rng, mods, g, ind, target_node, rate):
    """Replace one endpoint of each modification with probability ``rate``.

    The replacement endpoint is drawn from the legal candidate region and
    never collides with another modification of the same candidate, so the
    modification count is preserved exactly.
    """
    if isinstance(ind, SmallModIndicator) and target_node is not None:
        region = sorted(b_hop_neighborhood(g, target_node, ind.hops))
    else:
        region = list(range(g.num_nodes))
    out = list(mods)
    taken = {m.pair for m in out}
    for i, mod in enumerate(out):
        if rng.random() >= rate:
            continue
        kept = mod.u if rng.integers(2) == 0 else mod.v
        pool = []
        for cand in region:
            if cand == kept:
                continue
            pair = (min(kept, cand), max(kept, cand))
            if pair != mod.pair and pair in taken:
                continue
            pool.append(cand)
        if not pool:
            continue
        other = pool[int(rng.integers(len(pool)))]
        replacement = toggle_modification(g, kept, other)
        taken.discard(mod.pair)
        taken.add(replacement.pair)
        out[i] = replacement
    return tuple(sorted(out))


def repair(rng, mods, g, ind, target_node, budget):
    """Drop modifications in random order until the remainder is jointly valid."""
    order = list(rng.permutation(len(mods))) if mods else []
    current = g
    kept = []
    for i in order:
        if len(kept) >= budget:
            break
        mod = mods[int(i)]
        candidate, applied = apply_guarded(ind, g, current, mod, target_node)
        if applied:
            current = candidate
            kept.append(mod)
    return tuple(sorted(kept)), current


class GeneticAttack:
    """Population search over modification sets, scored by model loss.

    Fitness comes from the confidence vector (PBA-C only); a candidate that
    already flips the prediction ends the search early.
    """

    name = "genetic"
    supported_threats = frozenset({ThreatModel.PBA_C})

    def __init__(self, cfg=None):
        self.cfg = cfg or GeneticConfig()

    def _random_candidate(self, rng, g, ind, target_node, budget, pool):
        current = g
        mods = []
        for _ in range(budget):
            drawn = sample_valid_toggle(rng, g, current, ind, target_node, pool)
            if drawn is None:
                break
            current, mod = drawn
            mods.append(mod)
        return tuple(sorted(mods)), current

    def run(self, instance, handle, ind, budget, rng):
        cfg = self.cfg
        g, c, y = instance.graph, instance.target_node, instance.label
        pool = candidate_pairs(g, ind, c)

        population = []
        graphs = {}
        for _ in range(cfg.population_size):
            cand, graph = self._random_candidate(rng, g, ind, c, budget, pool)
            population.append(cand)
            graphs[cand] = graph

        fitness_cache = {}

        def fitness(cand):
            if cand not in fitness_cache:
                conf = handle.predict_confidence(graphs[cand], c)
                fitness_cache[cand] = (-np.log(max(conf[y], 1e-12)),
                                       int(np.argmax(conf)) != y)
            return fitness_cache[cand]

        best = population[0]
        for _ in range(cfg.rounds):
            for cand in population:
                fit, flipped = fitness(cand)
                if flipped:
                    return list(cand)
                if fit > fitness(best)[0]:
                    best = cand
            scores = np.array([fitness(cand)[0] for cand in population])
            if cfg.selection == "weighted":
                weights = scores - scores.min() + 1e-9
                probs = weights / weights.sum()
                breeding = [population[int(i)] for i in
                            rng.choice(len(population), size=len(population), p=probs)]
            else:
                order = sorted(range(len(population)),
                               key=lambda i: (-scores[i], i))
                breeding = [population[i] for i in order[: max(2, len(population) // 2)]]

            next_gen = [best] if cfg.elitism else []
            while len(next_gen) < cfg.population_size:
                pa = breeding[int(rng.integers(len(breeding)))]
                pb = breeding[int(rng.integers(len(breeding)))]
                child = crossover(rng, pa, pb, cfg.crossover_rate)
                child = mutate(rng, child, g, ind, c, cfg.mutation_rate)
                child, graph = repair(rng, child, g, ind, c, budget)
                graphs.setdefault(child, graph)
                next_gen.append(child)
            population = next_gen

        for cand in population:
            fit, flipped = fitness(cand)
            if flipped:
                return list(cand)
            if fit > fitness(best)[0]:
                best = cand
        return list(best)


class ExhaustiveAttack:
    """Try every budget-respecting modification set; the best any attack can do.

    Only feasible for m=1 or tiny candidate pools; refuses to enumerate past
    ``max_candidates``.
    """

    name = "exhaust"
    supported_threats = frozenset({ThreatModel.WBA, ThreatModel.PBA_C, ThreatModel.PBA_D})

    def __init__(self, max_candidates=200_000):
        self.max_candidates = max_candidates

    def run(self, instance, handle, ind, budget, rng):
        g, c, y = instance.graph, instance.target_node, instance.label
        pool = candidate_pairs(g, ind, c)
        total = 0
        for size in range(1, budget + 1):
            count = 1
            for i in range(size):
                count = count * (len(pool) - i) // (i + 1)
            total += count
            if total > self.max_candidates:
                raise RuntimeError(
                    f"exhaustive enumeration of {total}+ candidates exceeds cap "
                    f"{self.max_candidates}")
        for size in range(1, budget + 1):
            for combo in itertools.combinations(pool, size):
                current = g
                mods = []
                ok = True
                for u, v in combo:
                    mod = toggle_modification(current, u, v)
                    current, applied = apply_guarded(ind, g, current, mod, c)
                    if not applied:
                        ok = False
                        break
                    mods.append(mod)
                if not ok:
                    continue
                if handle.predict_label(current, c) != y:
                    return mods
        return []


class IdentityAttack:
    """No-op attacker; attacked accuracy equals clean accuracy."""

    name = "identity"
    supported_threats = frozenset(ThreatModel.ALL)

    def run(self, instance, handle, ind, budget, rng):
        return []

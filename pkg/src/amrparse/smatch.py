"""Smatch: F1 over the best variable mapping between two graphs' triples.

The score hill-climbs over injective variable mappings from several
starts (one concept-match heuristic start plus seeded random restarts);
an exhaustive oracle over all injective mappings backs the tests for
small graphs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .graph import AmrGraph


@dataclass
class TripleSet:
    instances: list    # (var, concept)
    relations: list    # (label, source var, target var)
    attributes: list   # (label, var, constant); includes the TOP triple

    def total(self) -> int:
        return len(self.instances) + len(self.relations) + len(self.attributes)


def triples(g: AmrGraph) -> TripleSet:
    return TripleSet(
        instances=[(v, c) for v, c in g.nodes],
        relations=[(rel, s, t) for s, rel, t in g.edges],
        attributes=[(rel, v, const) for v, rel, const in g.attributes]
                   + [("TOP", g.root, g.concept(g.root))],
    )


class _Matcher:
    """Counts matched triples of t1 under a var1 -> var2 mapping."""

    def __init__(self, t1: TripleSet, t2: TripleSet):
        self.t1 = t1
        self.inst2 = Counter(t2.instances)
        self.rel2 = Counter(t2.relations)
        self.attr2 = Counter(t2.attributes)

    def count(self, mapping: dict) -> int:
        matched = 0
        inst_used = Counter()
        for v, c in self.t1.instances:
            key = (mapping.get(v), c)
            if key[0] is not None and inst_used[key] < self.inst2.get(key, 0):
                inst_used[key] += 1
                matched += 1
        rel_used = Counter()
        for label, s, t in self.t1.relations:
            key = (label, mapping.get(s), mapping.get(t))
            if key[1] is not None and key[2] is not None \
                    and rel_used[key] < self.rel2.get(key, 0):
                rel_used[key] += 1
                matched += 1
        attr_used = Counter()
        for label, v, const in self.t1.attributes:
            key = (label, mapping.get(v), const)
            if key[1] is not None and attr_used[key] < self.attr2.get(key, 0):
                attr_used[key] += 1
                matched += 1
        return matched


def _f1(matched: int, n1: int, n2: int) -> tuple:
    precision = matched / n1 if n1 else 0.0
    recall = matched / n2 if n2 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class SmatchResult:
    precision: float
    recall: float
    f1: float
    matched: int
    mapping: dict


def _heuristic_start(vars1, vars2, concepts1, concepts2):
    mapping, used = {}, set()
    for v in vars1:
        for w in vars2:
            if w not in used and concepts2[w] == concepts1[v]:
                mapping[v] = w
                used.add(w)
                break
    return mapping


def _random_start(vars1, vars2, rng):
    k = min(len(vars1), len(vars2))
    chosen = rng.permutation(len(vars2))[:k]
    order = rng.permutation(len(vars1))[:k]
    return {vars1[i]: vars2[j] for i, j in zip(order, chosen)}


def _hill_climb(matcher, vars1, vars2, mapping):
    score = matcher.count(mapping)
    while True:
        best_gain, best_apply = 0, None
        used = set(mapping.values())
        for v in vars1:
            current = mapping.get(v)
            for w in vars2 + [None]:
                if w == current or (w is not None and w in used):
                    continue
                trial = dict(mapping)
                if w is None:
                    trial.pop(v, None)
                else:
                    trial[v] = w
                gain = matcher.count(trial) - score
                if gain > best_gain:
                    best_gain, best_apply = gain, trial
        for i, v in enumerate(vars1):
            for u in vars1[i + 1:]:
                if v not in mapping and u not in mapping:
                    continue
                trial = dict(mapping)
                mv, mu = trial.pop(v, None), trial.pop(u, None)
                if mu is not None:
                    trial[v] = mu
                if mv is not None:
                    trial[u] = mv
                gain = matcher.count(trial) - score
                if gain > best_gain:
                    best_gain, best_apply = gain, trial
        if best_apply is None:
            return mapping, score
        mapping, score = best_apply, score + best_gain


def smatch(g1: AmrGraph, g2: AmrGraph, restarts: int = 4, seed: int = 0) -> SmatchResult:
    """Best-mapping precision/recall/F1 of g1 against g2."""
    t1, t2 = triples(g1), triples(g2)
    matcher = _Matcher(t1, t2)
    vars1 = sorted(v for v, _ in g1.nodes)
    vars2 = sorted(v for v, _ in g2.nodes)
    concepts1, concepts2 = g1.concepts(), g2.concepts()

    starts = [_heuristic_start(vars1, vars2, concepts1, concepts2)]
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(restarts):
        starts.append(_random_start(vars1, vars2, rng))

    best_mapping, best = {}, -1
    for start in starts:
        mapping, score = _hill_climb(matcher, vars1, vars2, start)
        if score > best:
            best_mapping, best = mapping, score
        if best == min(t1.total(), t2.total()):
            break  # cannot do better
    p, r, f1 = _f1(best, t1.total(), t2.total())
    return SmatchResult(p, r, f1, best, best_mapping)


def smatch_exact_oracle(g1: AmrGraph, g2: AmrGraph, max_vars: int = 8) -> float:
    """Exhaustive best-mapping F1; guards against large graphs."""
    if len(g1.nodes) > len(g2.nodes):
        return smatch_exact_oracle(g2, g1, max_vars)
    vars1 = sorted(v for v, _ in g1.nodes)
    vars2 = sorted(v for v, _ in g2.nodes)
    if len(vars1) > max_vars or len(vars2) > max_vars:
        raise ValueError(f"oracle limited to {max_vars} variables")
    t1, t2 = triples(g1), triples(g2)
    matcher = _Matcher(t1, t2)
    best = 0
    for perm in permutations(vars2, len(vars1)):
        best = max(best, matcher.count(dict(zip(vars1, perm))))
        if best == min(t1.total(), t2.total()):
            break
    return _f1(best, t1.total(), t2.total())[2]


def corpus_smatch(pairs, restarts: int = 4, seed: int = 0) -> tuple:
    """Micro-averaged precision/recall/F1 over (predicted, gold) graph pairs."""
    matched = n1 = n2 = 0
    for g1, g2 in pairs:
        result = smatch(g1, g2, restarts=restarts, seed=seed)
        matched += result.matched
        n1 += triples(g1).total()
        n2 += triples(g2).total()
    return _f1(matched, n1, n2)

"""Maximum spanning arborescence with node-index constraints.

Chu-Liu-Edmonds by recursive cycle contraction over a dense score
matrix.  The index adaptation drops every edge whose endpoints carry the
same index before searching, because such nodes merge into one node
afterwards and self-loops are invalid; the dummy root (position 0,
index 0) guarantees every node keeps at least its root edge.
"""

from __future__ import annotations

import numpy as np


class MstError(RuntimeError):
    pass


def _best_incoming(nodes, incoming):
    """Per node, the highest-score incoming edge; Returns {v: (u, score)}."""
    best = {}
    for v in nodes:
        options = incoming.get(v)
        if not options:
            return None, v
        # deterministic tie-break toward the smaller head id
        best[v] = max(options.items(), key=lambda kv: (kv[1], -_rank(kv[0])))
    return best, None


def _rank(node) -> int:
    return node if isinstance(node, int) else node[1]


def _find_cycle(best, root):
    color = {}
    for start in best:
        if start in color:
            continue
        path = []
        v = start
        while v != root and v not in color:
            color[v] = "gray"
            path.append(v)
            v = best[v][0]
        if v != root and color.get(v) == "gray":
            return path[path.index(v):]
        for u in path:
            color[u] = "done"
    return None


def _edmonds(nodes, edges, root, fresh):
    """edges: {(u, v): score} over ``nodes`` + root.  Returns {v: u}."""
    incoming = {}
    for (u, v), s in edges.items():
        incoming.setdefault(v, {})[u] = s
    best, orphan = _best_incoming(nodes, incoming)
    if best is None:
        raise MstError(f"node {orphan!r} has no incoming edge")
    cycle = _find_cycle({v: (u, s) for v, (u, s) in best.items()}, root)
    if cycle is None:
        return {v: u for v, (u, s) in best.items()}

    cycle_set = set(cycle)
    cycle_score = {v: best[v][1] for v in cycle}
    super_node = ("cycle", fresh)

    new_edges = {}
    entry_choice = {}   # (u, super) -> v inside the cycle
    exit_choice = {}    # (super, w) -> v inside the cycle
    for (u, v), s in edges.items():
        u_in, v_in = u in cycle_set, v in cycle_set
        if u_in and v_in:
            continue
        if v_in:
            adjusted = s - cycle_score[v]
            key = (u, super_node)
            if key not in new_edges or adjusted > new_edges[key] or (
                    adjusted == new_edges[key] and _rank(v) < _rank(entry_choice[key])):
                new_edges[key] = adjusted
                entry_choice[key] = v
        elif u_in:
            key = (super_node, v)
            if key not in new_edges or s > new_edges[key] or (
                    s == new_edges[key] and _rank(u) < _rank(exit_choice[key])):
                new_edges[key] = s
                exit_choice[key] = u
        else:
            new_edges[(u, v)] = s

    contracted_nodes = [n for n in nodes if n not in cycle_set] + [super_node]
    parent = _edmonds(contracted_nodes, new_edges, root, fresh + 1)

    result = {}
    for v, u in parent.items():
        if v == super_node:
            continue
        result[v] = exit_choice[(super_node, v)] if u == super_node else u
    entry_u = parent[super_node]
    entry_v = entry_choice[(entry_u, super_node)]
    for v in cycle:
        result[v] = entry_u if v == entry_v else best[v][0]
    return result


def constrained_mst(scores: np.ndarray, indices) -> list:
    """Maximum arborescence over positions 1..m rooted at the dummy node 0.

    ``scores[k, t]`` is the score of head k over dependent t (both 0..m;
    column 0 and the diagonal are ignored).  Edges between two positions
    with equal ``indices`` entries are excluded in both directions.
    Returns the head position of each dependent 1..m.
    """
    scores = np.asarray(scores, dtype=np.float64)
    m = scores.shape[0] - 1
    if scores.shape != (m + 1, m + 1):
        raise ValueError("scores must be square (m+1, m+1)")
    if len(indices) != m:
        raise ValueError("need one index per non-root node")
    if m == 0:
        return []

    edges = {}
    for k in range(m + 1):
        for t in range(1, m + 1):
            if k == t:
                continue
            if k >= 1 and indices[k - 1] == indices[t - 1]:
                continue
            edges[(k, t)] = float(scores[k, t])

    parent = _edmonds(list(range(1, m + 1)), edges, 0, 0)
    return [parent[t] for t in range(1, m + 1)]


def unconstrained_mst(scores: np.ndarray) -> list:
    """Plain Chu-Liu-Edmonds over all edges (distinct pseudo-indices)."""
    m = scores.shape[0] - 1
    return constrained_mst(scores, list(range(1, m + 1)))


def arborescence_score(scores: np.ndarray, heads) -> float:
    return float(sum(scores[h, t + 1] for t, h in enumerate(heads)))


def brute_force_mst(scores: np.ndarray, indices) -> tuple:
    """Exhaustive maximum over index-respecting arborescences (test oracle).

    Returns (best score, one best head list).  Only usable for small m.
    """
    from itertools import product

    scores = np.asarray(scores, dtype=np.float64)
    m = scores.shape[0] - 1
    choices = []
    for t in range(1, m + 1):
        heads = [k for k in range(m + 1)
                 if k != t and (k == 0 or indices[k - 1] != indices[t - 1])]
        choices.append(heads)
    best_score, best_heads = -np.inf, None
    for assign in product(*choices):
        ok = True
        for t in range(1, m + 1):
            cur, hops = t, 0
            while cur != 0 and hops <= m:
                cur = assign[cur - 1]
                hops += 1
            if cur != 0:
                ok = False
                break
        if not ok:
            continue
        score = sum(scores[assign[t - 1], t] for t in range(1, m + 1))
        if score > best_score:
            best_score, best_heads = score, list(assign)
    if best_heads is None:
        raise MstError("no feasible arborescence")
    return float(best_score), best_heads


def force_single_root(scores: np.ndarray, indices, heads) -> list:
    """Rerun the search restricting the dummy root to one child if needed.

    Tries every candidate as the sole root child and keeps the best total
    score (ties toward the earlier position).
    """
    roots = [t + 1 for t, h in enumerate(heads) if h == 0]
    if len(roots) <= 1:
        return list(heads)
    m = len(heads)
    best = None
    for candidate in range(1, m + 1):
        masked = np.array(scores, dtype=np.float64, copy=True)
        floor = masked.min() - abs(masked.min()) - 1.0
        for t in range(1, m + 1):
            if t != candidate:
                masked[0, t] = floor
        try:
            cand_heads = constrained_mst(masked, indices)
        except MstError:
            continue
        if cand_heads.count(0) != 1 or cand_heads[candidate - 1] != 0:
            continue
        score = arborescence_score(scores, cand_heads)
        if best is None or score > best[0]:
            best = (score, cand_heads)
    if best is None:
        raise MstError("could not isolate a single root child")
    return best[1]

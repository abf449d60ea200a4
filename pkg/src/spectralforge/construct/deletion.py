"""Lowering the top eigenvalue one vertex deletion at a time.

Each step removes the vertex lying on the fewest closed walks of a fixed even
length, measured by the diagonal of the adjacency power. Because the graphs
are induced subgraphs of a near-Ramanujan start, interlacing keeps the second
eigenvalue in check and makes the top eigenvalue non-increasing, while
walk counts give a certified lower bound on how far it can fall in one step.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..graph_core import GenerationPolicy, Graph, delete_vertex, girth, random_regular
from ..spectral import SolverConfig, closed_walk_count, per_vertex_walk_counts, spectrum
from .trace import InterpolationTrace


@dataclass
class DeletionRun:
    graph: Graph
    trace: InterpolationTrace
    old_labels: tuple[int, ...]  # start-graph label of every vertex of ``graph``
    start: Graph
    certificates: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.graph
        yield self.trace


def walk_length(q: int, ell_max: int = 64) -> int:
    """Largest even length not above ``q/2``, capped at ``ell_max`` and at least 2."""
    ell = (q // 2) - ((q // 2) % 2)
    return max(2, min(ell, ell_max - ell_max % 2))


def step_factor(t_before: int, t_after: int, q_after: int, ell: int) -> float:
    """Certified ratio ``lambda1(after) / lambda1(before) >= (T'/(T q'))**(1/ell)``."""
    if t_after == 0:
        return 0.0
    log_ratio = math.log(t_after) - math.log(t_before) - math.log(q_after)
    return math.exp(log_ratio / ell)


def bfs_tree_leaves(g: Graph, root: int) -> list[int]:
    """Leaves (other than the root) of the BFS tree from ``root``, children taken in label order."""
    parent = {root: None}
    children = {root: 0}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in parent:
                parent[y] = x
                children[y] = 0
                children[x] += 1
                queue.append(y)
    return sorted(v for v, c in children.items() if c == 0 and v != root)


def _top_two(g: Graph, cfg: SolverConfig) -> tuple[float, float]:
    if g.n == 1:
        return 0.0, -math.inf
    w = spectrum(g, 2, 0, cfg, vectors=False).eigenvalues
    return float(w[0]), float(w[1])


def deletion_interpolate(n: int, d: int, target: float, connected: bool = False, seed: int = 0,
                         policy: GenerationPolicy | None = None, ell_max: int = 64,
                         cfg: SolverConfig = SolverConfig(), start: Graph | None = None) -> DeletionRun:
    """Delete vertices until the top eigenvalue crosses ``target``.

    In connected mode only leaves of a BFS spanning tree rooted at the start
    graph's vertex 0 are eligible, so every intermediate graph stays
    connected. Returns the closer of the two graphs bracketing the target.
    The trace records, per step, the certified factor and the resulting
    bound on how far the top eigenvalue can have dropped.
    """
    if n % 2:
        raise ValueError("n must be even")
    if policy is None:
        policy = GenerationPolicy(seed=seed, lambda2_ceiling=2 * math.sqrt(d - 1))
    g = start if start is not None else random_regular(n, d, policy)
    g0 = g
    labels = tuple(range(g.n))
    trace = InterpolationTrace(target=target)
    l1, l2 = _top_two(g, cfg)
    trace.append(0, "start", l1, girth(g), g.n, lambda2=l2, factor=1.0, drop_bound=0.0)
    prev = (g, labels)
    best = (g, labels, 0)
    stop = "exhausted"
    step = 0
    while True:
        if l1 <= target:
            stop = "target-crossed"
            if step > 0:
                pv = trace.steps[step - 1].eigenvalue
                best = (*prev, step - 1) if abs(pv - target) <= abs(l1 - target) else (g, labels, step)
            else:
                best = (g, labels, 0)
            break
        if g.n <= 2:
            break
        ell = walk_length(g.n, ell_max)
        counts = per_vertex_walk_counts(g, ell)
        total = sum(counts)
        if connected:
            root = labels.index(0)
            candidates = bfs_tree_leaves(g, root)
        else:
            candidates = range(g.n)
        v = min(candidates, key=lambda x: (counts[x], x))
        prev = (g, labels)
        g, kept = delete_vertex(g, v)
        removed = labels[v]
        labels = tuple(labels[i] for i in kept)
        step += 1
        t_after = closed_walk_count(g, ell)
        f = step_factor(total, t_after, g.n, ell)
        l1_prev = l1
        l1, l2 = _top_two(g, cfg)
        trace.append(step, f"delete {removed}", l1, girth(g), g.n, lambda2=l2, factor=f,
                     drop_bound=(1.0 - f) * l1_prev, walk_length=ell)
        if abs(l1 - target) < abs(trace.steps[best[2]].eigenvalue - target):
            best = (g, labels, step)
    graph, lab, bstep = best
    trace.best_step = bstep
    trace.achieved = trace.steps[bstep].eigenvalue
    trace.stop_reason = stop
    crossing = trace.steps[-1]
    cert = {
        "crossing_step_drop_bound": crossing.extra["drop_bound"],
        "error": abs(trace.achieved - target),
        "within_step_bound": abs(trace.achieved - target) <= crossing.extra["drop_bound"] + 1e-12,
        "max_lambda2": max(s.extra["lambda2"] for s in trace.steps),
        "monotone_lambda1": all(b.eigenvalue <= a.eigenvalue + 1e-9
                                for a, b in zip(trace.steps, trace.steps[1:])),
        "connected": graph.is_connected() if connected else None,
    }
    return DeletionRun(graph, trace, lab, g0, cert)

"""Searches for small graphs whose deep tree augmentation has a prescribed top eigenvalue.

All three searches follow one pattern: start from a regular graph whose
augmentation has top eigenvalue ``d``, delete vertices in a fixed order, and
track the top eigenvalue of the ``depth``-level augmentation of every
intermediate graph. That eigenvalue falls from ``d`` to below the bulk edge
``2*sqrt(d-1)`` in small steps, so some intermediate graph lands near any
admissible target. The augmentations are far too large to build at the
required depths; the tracked values come from the tree transfer reduction,
and an explicit build at a modest depth cross-checks them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..augment import augment, bulk_edge, level_quotient, transfer_eigenvalues
from ..graph_core import (GenerationPolicy, Graph, disjoint_union, girth, random_lift,
                          random_regular, complete_graph)
from ..spectral import SolverConfig, spectrum
from .trace import InterpolationTrace


class GadgetSearchError(RuntimeError):
    """No intermediate graph met the acceptance window; ``best`` holds the closest one."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass
class GadgetResult:
    core: Graph
    d: int
    depth: int  # augmentation depth at which ``lambda1`` is certified
    lambda1: float  # top eigenvalue of the depth-level augmentation
    lambda2: float  # second eigenvalue of the augmentation, or the bulk edge if none above it
    trace: InterpolationTrace
    certificates: dict = field(default_factory=dict)
    padding: int = 0  # isolated edges appended to reach leaf-count divisibility

    @property
    def trees(self) -> np.ndarray:
        return self.d - self.core.degrees

    @property
    def leaf_count(self) -> int:
        """Leaves of the one-level augmentation, i.e. the total degree deficiency."""
        return int(self.trees.sum())

    def augmented(self, levels: int):
        """Explicit ``levels``-level augmentation; only sensible for small depths."""
        return augment(self.core, self.d, levels)


def _top_two_transfer(h: Graph, d: int, depth: int) -> tuple[float, float]:
    """Top two eigenvalues of the augmentation, each clamped below at the bulk edge.

    Eigenvalues inside the bulk are reported as the edge itself, which is an
    upper bound for them.
    """
    edge = bulk_edge(d)
    if h.n == 0:
        return edge, edge
    vals = transfer_eigenvalues(h, d - h.degrees, d, depth, k=2 if h.n <= 600 else 1)
    l1 = vals[0] if vals else edge
    l2 = vals[1] if len(vals) > 1 else edge
    return l1, l2


def quotient_top(core: Graph, d: int, levels: int, cfg: SolverConfig = SolverConfig()) -> float:
    """Top eigenvalue of the augmentation from its level quotient.

    The Perron vector is invariant under the automorphisms of each pendant
    tree, hence constant on tree levels, so the quotient keeps the top
    eigenvalue even when it sits inside the bulk.
    """
    Q = level_quotient(core, d - core.degrees, d, levels)
    return float(spectrum(Q, 1, 0, cfg, vectors=False).eigenvalues[0])


def _explicit_check(core: Graph, d: int, max_vertices: int, cfg: SolverConfig) -> dict:
    """Build the deepest augmentation within ``max_vertices`` and compare with the transfer."""
    deficit = int((d - core.degrees).sum())
    levels, size = 0, core.n
    while levels < 64:
        nxt = core.n + deficit * sum((d - 1) ** i for i in range(levels + 1))
        if nxt > max_vertices:
            break
        levels, size = levels + 1, nxt
    aug = augment(core, d, levels)
    w = spectrum(aug.graph, 2, 0, cfg, vectors=False).eigenvalues
    l1, _ = _top_two_transfer(core, d, levels)
    direct_top = float(w[0])
    # below the bulk edge the transfer only gives an upper bound
    agree = abs(direct_top - l1) <= 1e-7 if l1 > bulk_edge(d) + 1e-9 else direct_top <= l1 + 1e-9
    return {"levels": levels, "vertices": aug.graph.n, "direct_lambda1": direct_top,
            "direct_lambda2": float(w[1]), "transfer_lambda1": l1, "agree": bool(agree)}


def _closest(values: list[float], target: float, eligible=None) -> int:
    idx = [i for i in range(len(values)) if eligible is None or eligible[i]]
    return min(idx, key=lambda i: (abs(values[i] - target), i))


def _pad(h: Graph, d: int, modulus: int) -> tuple[Graph, int]:
    """Append isolated edges until the total deficiency is divisible by ``modulus``."""
    k = 0
    while int((d - h.degrees).sum()) % modulus:
        h, _ = disjoint_union(h, Graph.from_edges(2, [(0, 1)]))
        k += 1
        if k > modulus:
            raise ValueError("padding cannot reach the requested divisibility")
    return h, k


def gadget_search_simple(d: int, target: float, eps: float, seed: int = 0, n: int = 100,
                         policy: GenerationPolicy | None = None, fallback: bool = True,
                         cfg: SolverConfig = SolverConfig()) -> GadgetResult:
    """Delete two non-adjacent vertices per step from a near-Ramanujan ``d``-regular graph.

    The tracked value is the top eigenvalue of the ``J``-level augmentation
    with ``J = ceil(4*sqrt(d-1)/eps)``. The chosen graph is padded with
    isolated edges so that its total deficiency is divisible by ``2d``.
    When the chosen augmentation does not rise ``eps`` above the bulk edge,
    ``d`` isolated edges serve as the gadget instead; ``fallback=False``
    keeps the searched graph regardless.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    edge = bulk_edge(d)
    depth = math.ceil(4 * math.sqrt(d - 1) / eps)
    if policy is None:
        policy = GenerationPolicy(seed=seed, min_girth=5, lambda2_ceiling=edge + min(eps, 0.1))
    h = random_regular(n, d, policy)
    trace = InterpolationTrace(target=target)
    graphs = [h]
    l1, _ = _top_two_transfer(h, d, depth)
    trace.append(0, "start", l1, girth(h), h.n)
    step = 0
    while l1 > target and h.n >= 2:
        # smallest label, then the smallest label not adjacent to it
        a = 0
        b = next((x for x in range(1, h.n) if not h.has_edge(a, x)), None)
        if b is None:
            break
        h, _ = h.induced_subgraph([x for x in range(h.n) if x not in (a, b)])
        step += 1
        l1, _ = _top_two_transfer(h, d, depth)
        graphs.append(h)
        trace.append(step, "delete 2", l1, girth(h), h.n)
    vals = trace.eigenvalues
    crossed = vals[-1] <= target
    if crossed and step > 0:
        best = step - 1 if abs(vals[step - 1] - target) <= abs(vals[step] - target) else step
    else:
        best = _closest(vals, target)
    core = graphs[best]
    trivial = fallback and vals[best] < edge + eps
    if trivial:
        core = Graph.from_edges(2 * d, [(2 * i, 2 * i + 1) for i in range(d)])
        padding = 0
    else:
        core, padding = _pad(core, d, 2 * d)
    lam1 = quotient_top(core, d, depth, cfg) if trivial else _top_two_transfer(core, d, depth)[0]
    lam2 = _top_two_transfer(core, d, depth)[1]
    lam2_core = float(spectrum(core, 2, 0, cfg, vectors=False).eigenvalues[1]) if core.n > 1 else -math.inf
    trace.best_step, trace.achieved = best, vals[best]
    trace.stop_reason = "target-crossed" if crossed else "exhausted"
    g = girth(core)
    cert = {
        "depth": depth,
        "error": abs(lam1 - target),
        "within_2eps": abs(lam1 - target) <= 2 * eps + 1e-12,
        "core_lambda2": lam2_core,
        "core_lambda2_ok": lam2_core <= edge + eps + 1e-9,
        "trivial_gadget": trivial,
        "leaf_divisible_2d": int((d - core.degrees).sum()) % (2 * d) == 0,
        "girth": g,
        "girth_meets_hypothesis": g >= 20 * d / eps,
    }
    return GadgetResult(core, d, depth, lam1, lam2, trace, cert, padding)


def gadget_search_lift(d: int, target: float, eps: float, seed: int = 0, N: int = 40,
                       min_girth: int | None = 5, explicit_vertices: int = 4000,
                       cfg: SolverConfig = SolverConfig()) -> GadgetResult:
    """Delete the vertices of an ``N``-lift of ``K_{d+1}`` fibre by fibre.

    Vertex ``v*N + i`` of the lift lies over vertex ``v`` of ``K_{d+1}``, so
    deleting labels in increasing order empties fibres ``0 .. d-1`` and leaves
    fibre ``d``, an independent set. The run stops once the tracked value
    (top eigenvalue of the ``I``-level augmentation, ``I = ceil(10*sqrt(d-1)/eps)``)
    drops to ``2*sqrt(d-1) + eps/2`` or after ``d*N`` deletions. Only steps
    whose total deficiency is divisible by ``d`` are eligible, and the
    eligible step closest to ``target`` is returned. The second eigenvalue of
    every intermediate graph is measured and recorded in the trace.
    """
    if not bulk_edge(d) < target < d:
        raise ValueError("target must lie strictly between 2*sqrt(d-1) and d")
    edge = bulk_edge(d)
    depth = math.ceil(10 * math.sqrt(d - 1) / eps)
    lift = random_lift(complete_graph(d + 1), N, seed, min_girth=min_girth)
    lift_girth = girth(lift)
    radius = (int(lift_girth) - 1) // 2 if math.isfinite(lift_girth) else math.inf
    trace = InterpolationTrace(target=target)
    graphs = [lift]

    def record(step, h, desc):
        l1, l2 = _top_two_transfer(h, d, depth)
        core_l2 = float(spectrum(h, 2, 0, cfg, vectors=False).eigenvalues[1]) if h.n > 1 else -math.inf
        trace.append(step, desc, l1, girth(h), h.n, lambda2=l2, core_lambda2=core_l2,
                     deficiency=int((d - h.degrees).sum()))
        return l1

    l1 = record(0, lift, "start")
    h = lift
    for i in range(d * N):
        if l1 <= edge + eps / 2 or l1 < target - eps:
            break
        h, _ = lift.induced_subgraph(range(i + 1, lift.n))
        graphs.append(h)
        l1 = record(i + 1, h, f"delete {i}")
    vals = trace.eigenvalues
    eligible = [s.extra["deficiency"] % d == 0 for s in trace.steps]
    best = _closest(vals, target, eligible)
    core = graphs[best]
    rec = trace.steps[best]
    trace.best_step, trace.achieved = best, vals[best]
    trace.stop_reason = "threshold" if l1 <= edge + eps / 2 or l1 < target - eps else "exhausted"
    drifts = [abs(b - a) for a, b in zip(vals, vals[1:]) if a >= edge + eps / 2]
    step_bound = 6 * d / radius if math.isfinite(radius) and radius > 0 else math.inf
    lam2_bound = edge + 1 / math.sqrt(d - 1) + eps / 2
    cert = {
        "depth": depth,
        "error": abs(rec.eigenvalue - target),
        "within_eps": abs(rec.eigenvalue - target) <= eps + 1e-12,
        "lambda2": rec.extra["lambda2"],
        "lambda2_bound": lam2_bound,
        "lambda2_ok": rec.extra["lambda2"] <= lam2_bound + 1e-9,
        "lift_girth": lift_girth,
        "max_step_drift": max(drifts, default=0.0),
        "step_drift_bound": step_bound,
        "step_drift_ok": max(drifts, default=0.0) <= step_bound + 1e-9,
        "deficiency_divisible_d": rec.extra["deficiency"] % d == 0,
        "explicit": _explicit_check(core, d, explicit_vertices, cfg),
    }
    return GadgetResult(core, d, depth, rec.eigenvalue, rec.extra["lambda2"], trace, cert)


def bipartite_gadget(d: int, eps1: float, eps2: float, n0: int = 200, seed: int = 0,
                     quotient_levels: int = 200, cfg: SolverConfig = SolverConfig()) -> GadgetResult:
    """Gadget whose deep augmentation has top eigenvalue in ``(edge+eps1, edge+eps1+eps2)``.

    Starts from a bipartite ``d``-regular graph on ``2*n0`` vertices with
    sides ``0..n0-1`` and ``n0..2*n0-1`` and deletes the first side in label
    order, so every deletion raises the deficiency by exactly ``d`` and the
    fully reduced graph is edgeless. The step is chosen inside the inner
    window ``(edge+eps1+0.5*eps, edge+eps1+0.6*eps)`` when one exists,
    otherwise as close to its centre as the outer window allows. The value at
    the certified depth ``ceil(100*sqrt(d-1)/min(eps1, eps2))`` comes from the
    transfer reduction and is cross-checked on the level quotient at a
    shallower depth.

    Raises :class:`GadgetSearchError` when no step lands in the outer window,
    which happens whenever ``edge + eps1 >= d``.
    """
    if eps1 <= 0 or eps2 <= 0:
        raise ValueError("eps1 and eps2 must be positive")
    edge = bulk_edge(d)
    eps = min(eps1, eps2)
    depth = math.ceil(100 * math.sqrt(d - 1) / eps)
    n = 2 * n0
    floor = max(4, math.ceil(0.5 * math.log(n) / math.log(d)))
    floor += floor % 2  # bipartite graphs have even girth
    g0 = random_regular(n, d, GenerationPolicy(seed=seed, min_girth=floor), bipartite=True)
    lo, hi = edge + eps1, edge + eps1 + eps2
    inner = (edge + eps1 + 0.5 * eps, edge + eps1 + 0.6 * eps)
    centre = 0.5 * (inner[0] + inner[1])
    trace = InterpolationTrace(target=centre)
    l1, _ = _top_two_transfer(g0, d, depth)
    trace.append(0, "start", l1, girth(g0), g0.n)
    graphs = [g0]
    for i in range(n0):
        if l1 < lo:
            break
        h, _ = g0.induced_subgraph(range(i + 1, n))
        l1, _ = _top_two_transfer(h, d, depth)
        graphs.append(h)
        trace.append(i + 1, f"delete {i}", l1, girth(h), h.n)
    vals = trace.eigenvalues
    in_outer = [lo < v < hi for v in vals]
    if not any(in_outer):
        trace.best_step = _closest(vals, centre)
        trace.achieved = vals[trace.best_step]
        trace.stop_reason = "window-missed"
        raise GadgetSearchError(
            f"no step landed in ({lo:.6f}, {hi:.6f}); closest {trace.achieved:.6f}",
            best=(graphs[trace.best_step], trace))
    best = _closest(vals, centre, in_outer)
    core = graphs[best]
    trace.best_step, trace.achieved = best, vals[best]
    trace.stop_reason = "window-hit"
    lam1, lam2 = _top_two_transfer(core, d, depth)
    sample = min(depth, quotient_levels)
    q_top = quotient_top(core, d, sample, cfg)
    t_top = _top_two_transfer(core, d, sample)[0]
    gval = girth(core)
    cert = {
        "depth": depth,
        "window": [lo, hi],
        "inner_window": list(inner),
        "in_window": lo < lam1 < hi,
        "in_inner_window": inner[0] < lam1 < inner[1],
        "sampled_levels": sample,
        "sampled_transfer": t_top,
        "sampled_quotient": q_top,
        "sampled_in_window": lo < q_top < hi,
        "sampled_agree": abs(q_top - t_top) <= 1e-7,
        "vertices": core.n,
        "min_vertices_ok": core.n >= n0,
        "girth": gval,
        "girth_ok": gval >= 0.5 * math.log(core.n) / math.log(d),
        "deficiency_divisible_d": int((d - core.degrees).sum()) % d == 0,
    }
    return GadgetResult(core, d, depth, lam1, lam2, trace, cert)

"""Steering an extreme eigenvalue of a regular graph by a sequence of swaps.

Starting from a high-girth near-Ramanujan graph and a fixed split of the
vertices into two halves, each swap either removes two crossing edges (which
pushes the second eigenvalue towards ``d``) or creates two (which pushes the
smallest eigenvalue towards ``-d``). Swapped edges are kept far apart so the
girth never drops below the configured floor, and with high girth a single
swap moves the tracked eigenvalue by little.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph_core import (Bisection, GenerationPolicy, Graph, bisect, distances_from,
                          girth, odd_girth, random_regular, swap)
from ..spectral import SolverConfig, rayleigh, spectrum
from .trace import InterpolationTrace


@dataclass
class SwapRun:
    graph: Graph  # the returned (closest) graph
    trace: InterpolationTrace
    start: Graph
    terminal: Graph  # last graph of the sequence
    bisection: Bisection
    certificates: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.graph
        yield self.trace


def swap_radius(girth_value: float) -> float:
    """Largest ``r`` with ``girth >= 2r - 1``."""
    return math.inf if math.isinf(girth_value) else (int(girth_value) + 1) // 2


def swap_drift_bound(girth_a: float, girth_b: float) -> float:
    """Per-swap movement allowed for an eigenvalue outside the bulk: ``8/r``."""
    r = swap_radius(min(girth_a, girth_b))
    return 0.0 if math.isinf(r) else 8.0 / r


def partner_distance(n: int, d: int, girth_value: float, girth_floor: int) -> int:
    """Minimum distance between the two swapped edges.

    The counting radius ``r`` keeps enough candidate edges available; the
    floor term keeps the girth of every new cycle at least ``girth_floor``.
    """
    r_count = int(0.25 * math.log(n / 4) / math.log(d)) if n > 4 else 0
    r_girth = (int(girth_value) - 1) // 2 if math.isfinite(girth_value) else r_count
    r = max(1, min(r_girth, r_count))
    return max(2 * r - 1, girth_floor - 1, 2)


def _default_policy(d: int, seed: int) -> GenerationPolicy:
    return GenerationPolicy(seed=seed, min_girth=6, lambda2_ceiling=2 * math.sqrt(d - 1) + 0.1)


def _find_swap(g: Graph, in_b: np.ndarray, mode: str, dist: int):
    """Oriented edge pair for the next swap, or None."""
    edges = g.edges
    if mode == "lambda2":
        cross = [e for e in edges if in_b[e[0]] != in_b[e[1]]]
        for e1 in cross:
            near = distances_from(g, e1, limit=dist - 1)
            v1, v2 = e1 if in_b[e1[0]] else (e1[1], e1[0])
            for e2 in cross:
                if e2[0] in near or e2[1] in near:
                    continue
                u1, u2 = e2 if in_b[e2[0]] else (e2[1], e2[0])
                if not g.has_edge(v1, u1) and not g.has_edge(v2, u2):
                    return (v1, v2), (u1, u2)
        return None
    inside = [e for e in edges if in_b[e[0]] == in_b[e[1]]]
    for e1 in inside:
        near = distances_from(g, e1, limit=dist - 1)
        for e2 in inside:
            if in_b[e2[0]] == in_b[e1[0]] or e2[0] in near or e2[1] in near:
                continue
            if not g.has_edge(e1[0], e2[0]) and not g.has_edge(e1[1], e2[1]):
                return tuple(e1), tuple(e2)
    return None


def _run(n: int, d: int, target: float | None, mode: str, policy: GenerationPolicy | None,
         seed: int, cfg: SolverConfig, start: Graph | None) -> SwapRun:
    if n % 2:
        raise ValueError("n must be even")
    policy = policy or _default_policy(d, seed)
    g = start if start is not None else random_regular(n, d, policy)
    g0 = g
    floor = policy.min_girth or 3
    bis = bisect(g, seed)
    in_b = np.zeros(n, dtype=bool)
    in_b[list(bis.part_b)] = True

    def measure(h: Graph) -> float:
        if mode == "lambda2":
            return float(spectrum(h, 2, 0, cfg, vectors=False).eigenvalues[1])
        return float(spectrum(h, 0, 1, cfg, vectors=False).eigenvalues[0])

    def counter(h: Graph) -> int:
        e = h.edge_array
        crossing = int(np.sum(in_b[e[:, 0]] != in_b[e[:, 1]]))
        return crossing if mode == "lambda2" else h.edge_count - crossing

    def reached(val: float) -> bool:
        return val >= target if mode == "lambda2" else val <= target

    threshold = math.sqrt(n) if mode == "lambda2" else 2 * math.sqrt(n)
    trace = InterpolationTrace(target=target)
    val, gg = measure(g), girth(g)
    extra = {"odd_girth": odd_girth(g)} if mode == "lambda_min" else {}
    trace.append(0, "start", val, gg, counter(g), **extra)
    best_graph, best_step = g, 0
    prev_graph = g
    step = 0
    stop = ""
    while True:
        if target is not None and reached(val):
            stop = "target-crossed"
            if step > 0:
                prev_val = trace.steps[step - 1].eigenvalue
                if abs(prev_val - target) <= abs(val - target):
                    best_graph, best_step = prev_graph, step - 1
                else:
                    best_graph, best_step = g, step
            break
        if target is None and trace.steps[-1].counter <= threshold:
            stop = "counter-threshold"
            break
        pair = _find_swap(g, in_b, mode, partner_distance(n, d, gg, floor))
        if pair is None:
            stop = "no-partner"
            break
        e1, e2 = pair
        prev_graph = g
        g = swap(g, e1, e2)
        step += 1
        val, gg = measure(g), girth(g)
        extra = {"odd_girth": odd_girth(g)} if mode == "lambda_min" else {}
        desc = f"swap {e1[0]}-{e1[1]} {e2[0]}-{e2[1]}"
        trace.append(step, desc, val, gg, counter(g), **extra)
        if target is not None and abs(val - target) < abs(trace.steps[best_step].eigenvalue - target):
            best_graph, best_step = g, step
    if target is None:
        best_graph, best_step = g, step
    trace.best_step = best_step
    trace.achieved = trace.steps[best_step].eigenvalue
    trace.stop_reason = stop
    cert = terminal_certificate(g, bis, d, mode, trace.steps[-1].eigenvalue)
    return SwapRun(best_graph, trace, g0, g, bis, cert)


def terminal_certificate(g: Graph, bis: Bisection, d: int, mode: str, value: float) -> dict:
    """Rayleigh quotient of the +-1 split vector against the terminal bound."""
    n = g.n
    q = rayleigh(g, bis.side(n))
    if mode == "lambda2":
        bound = d - 4 / math.sqrt(n)
        return {"rayleigh": q, "bound": bound, "eigenvalue": value,
                "rayleigh_meets_bound": q >= bound, "eigenvalue_meets_bound": value >= bound}
    bound = -d + 8 / math.sqrt(n)
    return {"rayleigh": q, "bound": bound, "eigenvalue": value,
            "rayleigh_meets_bound": q <= bound, "eigenvalue_meets_bound": value <= bound}


def interpolate_lambda2(n: int, d: int, target: float | None = None,
                        policy: GenerationPolicy | None = None, seed: int = 0,
                        cfg: SolverConfig = SolverConfig(), start: Graph | None = None) -> SwapRun:
    """Swap crossing edges away until the second eigenvalue reaches ``target``.

    With ``target=None`` the run goes on until at most ``sqrt(n)`` crossing
    edges remain. Unpacks as ``(graph, trace)``.
    """
    return _run(n, d, target, "lambda2", policy, seed, cfg, start)


def interpolate_lambda_min(n: int, d: int, target: float | None = None,
                           policy: GenerationPolicy | None = None, seed: int = 0,
                           cfg: SolverConfig = SolverConfig(), start: Graph | None = None) -> SwapRun:
    """Mirror of :func:`interpolate_lambda2` for the smallest eigenvalue.

    Swaps turn two edges inside the halves into crossing edges; without a
    target the run stops once at most ``2*sqrt(n)`` non-crossing edges remain.
    The trace carries the odd girth of every graph.
    """
    return _run(n, d, target, "lambda_min", policy, seed, cfg, start)

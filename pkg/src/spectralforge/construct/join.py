"""Joining graphs into a chain by single bridging edges."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..graph_core import Graph, GraphError, disjoint_union, girth
from ..spectral import GUARD, eigenvalues


@dataclass
class JoinResult:
    graph: Graph
    offsets: list[int]
    join_edges: list[tuple[int, int]]


def _low_degree(g: Graph, d: int) -> list[int]:
    return [v for v in range(g.n) if g.degree(v) < d]


def chain_join(parts: list[Graph], d: int | None = None) -> JoinResult:
    """Union of ``parts`` with one edge from part ``j`` to part ``j+1``.

    Part ``j`` contributes its smallest-label vertex of degree below ``d`` as
    the entry point and its next one as the exit point; end parts need only
    one. ``d`` defaults to the largest degree present (at least 2).
    """
    if not parts:
        raise GraphError("nothing to join")
    if d is None:
        d = max(2, max(p.max_degree for p in parts))
    union, offsets = disjoint_union(*parts)
    edges = []
    for j in range(len(parts) - 1):
        a, b = parts[j], parts[j + 1]
        low_a, low_b = _low_degree(a, d), _low_degree(b, d)
        need_a = 2 if j > 0 else 1
        if len(low_a) < need_a or not low_b:
            raise GraphError(f"part {j if len(low_a) < need_a else j + 1} has too few vertices of degree < {d}")
        exit_a = low_a[1] if j > 0 else low_a[0]
        entry_b = low_b[0]
        edges.append((offsets[j] + exit_a, offsets[j + 1] + entry_b))
    return JoinResult(union.with_edges(add=edges), offsets, edges)


def merged_top(parts: list[Graph], k: int) -> np.ndarray:
    """The ``k`` largest values among all parts' eigenvalues, with multiplicity."""
    allw = np.concatenate([eigenvalues(p) for p in parts])
    return np.sort(allw)[::-1][:k]


def join_drift_report(parts: list[Graph], k: int, d: int | None = None) -> list[dict]:
    """Check each bridging step: ``|mu_s - lambda_s| <= 2s/(r+1)``.

    Step ``j`` compares the chain of the first ``j`` parts, taken together
    with part ``j`` as a disjoint union, against the chain of the first
    ``j+1`` parts, which differs from it by exactly one edge. ``r`` comes from
    ``girth >= 2r+1`` over the parts. An index ``s`` is applicable only when
    the top ``s`` eigenvalues of the union all clear ``2*sqrt(d-1)``, which
    is where the sup-norm estimate behind the bound is available.
    """
    if d is None:
        d = max(2, max(p.max_degree for p in parts))
    g = min(girth(p) for p in parts)
    r = math.inf if math.isinf(g) else (int(g) - 1) // 2
    edge = 2 * math.sqrt(d - 1)
    out = []
    current = parts[0]
    for j in range(1, len(parts)):
        mu = merged_top([current, parts[j]], k)
        current = chain_join(parts[:j + 1], d).graph
        lam = eigenvalues(current)[:k]
        for s in range(1, min(k, len(mu), len(lam)) + 1):
            bound = 0.0 if math.isinf(r) else 2 * s / (r + 1)
            applicable = bool(np.all(mu[:s] > edge + GUARD))
            diff = float(abs(mu[s - 1] - lam[s - 1]))
            out.append({"join": j, "s": s, "mu": float(mu[s - 1]), "lambda": float(lam[s - 1]),
                        "diff": diff, "bound": bound, "applicable": applicable,
                        "holds": (diff <= bound + GUARD) if applicable else None})
    return out

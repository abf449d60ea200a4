"""Grafting small gadgets into a large regular host.

A set ``M`` of host vertices, pairwise far apart, is removed. This leaves
``|M|*d`` host vertices one short of degree ``d``. Every gadget vertex ``v``
of degree ``deg(v) < d`` is then joined to ``d - deg(v)`` of those host
vertices, so the result is ``d``-regular again. Far apart patches barely
interact, so each gadget's top eigenvalue reappears (up to a small error) as
an eigenvalue of the patched graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph_core import Graph, GraphError, disjoint_union, distances_from, girth
from ..spectral import GUARD, SolverConfig, eigenvalues, spectrum


class PatchError(GraphError):
    pass


@dataclass
class PatchPlan:
    host: Graph
    gadgets: list[Graph]
    patch_vertices: tuple[int, ...]
    radius: int
    d: int

    @property
    def leaf_count(self) -> int:
        return int(sum((self.d - g.degrees).sum() for g in self.gadgets))

    def validate(self, divisor: int | None = None) -> None:
        """Raise :class:`PatchError` unless the plan can be carried out.

        ``divisor`` (default ``d``) must divide the total leaf count.
        """
        d = self.d
        if not self.host.is_regular(d):
            raise PatchError(f"host is not {d}-regular")
        for i, g in enumerate(self.gadgets):
            if g.n and g.max_degree > d:
                raise PatchError(f"gadget {i} has a vertex of degree above {d}")
        if len(self.patch_vertices) * d != self.leaf_count:
            raise PatchError(f"|M|*d = {len(self.patch_vertices) * d} but the gadgets have "
                             f"{self.leaf_count} leaves")
        if self.leaf_count % (divisor or d):
            raise PatchError(f"leaf count {self.leaf_count} is not divisible by {divisor or d}")
        M = list(self.patch_vertices)
        for i, m in enumerate(M):
            near = distances_from(self.host, [m], limit=4 * self.radius)
            for other in M[i + 1:]:
                if other in near:
                    raise PatchError(f"patch vertices {m} and {other} are within distance "
                                     f"{4 * self.radius}")


@dataclass
class PatchResult:
    graph: Graph
    plan: PatchPlan
    host_labels: tuple[int, ...]  # host label of each of the first len(host_labels) vertices
    gadget_offsets: list[int]  # first vertex of each gadget in ``graph``
    certificates: dict = field(default_factory=dict)

    def gadget_vertices(self, i: int) -> range:
        return range(self.gadget_offsets[i], self.gadget_offsets[i] + self.plan.gadgets[i].n)


def select_patch_vertices(host: Graph, count: int, radius: int) -> tuple[int, ...]:
    """Greedy choice, in label order, of ``count`` vertices pairwise more than ``4*radius`` apart."""
    if count == 0:
        return ()
    if not host.is_connected():
        raise PatchError("host must be connected")
    blocked = np.zeros(host.n, dtype=bool)
    chosen = []
    for v in range(host.n):
        if blocked[v]:
            continue
        chosen.append(v)
        if len(chosen) == count:
            return tuple(chosen)
        blocked[list(distances_from(host, [v], limit=4 * radius))] = True
    raise PatchError(f"only {len(chosen)} of {count} vertices fit at pairwise distance "
                     f"> {4 * radius} in a host of {host.n} vertices")


def plan_patch(host: Graph, gadgets: list[Graph], radius: int, d: int | None = None) -> PatchPlan:
    d = host.max_degree if d is None else d
    leaves = int(sum((d - g.degrees).sum() for g in gadgets))
    if leaves % d:
        raise PatchError(f"leaf count {leaves} is not divisible by d={d}")
    M = select_patch_vertices(host, leaves // d, radius)
    return PatchPlan(host, list(gadgets), M, radius, d)


def patch(plan: PatchPlan, certify: bool = False, k: int | None = None,
          cfg: SolverConfig = SolverConfig()) -> PatchResult:
    """Carry out ``plan``.

    The host minus ``M`` keeps its relative label order and comes first;
    gadgets follow in list order. Host slots are the neighbours of the
    patch vertices (patch vertices in order, neighbours in label order) and
    are consumed in turn by gadget vertices in label order, each taking as
    many as it lacks. With ``certify`` the eigenvalue bounds are checked.
    """
    plan.validate()
    d, host = plan.d, plan.host
    M = set(plan.patch_vertices)
    keep = [v for v in range(host.n) if v not in M]
    base, host_labels = host.induced_subgraph(keep)
    new_id = {old: i for i, old in enumerate(host_labels)}
    slots = [new_id[w] for m in plan.patch_vertices for w in host.adjacency[m]]
    union, offsets = disjoint_union(base, *plan.gadgets)
    edges = []
    it = iter(slots)
    for gi, g in enumerate(plan.gadgets):
        off = offsets[gi + 1]
        for v in range(g.n):
            for _ in range(d - g.degree(v)):
                edges.append((off + v, next(it)))
    out = union.with_edges(add=edges)
    result = PatchResult(out, plan, host_labels, offsets[1:])
    if certify:
        result.certificates = patch_certificates(result, k, cfg)
    return result


def pinning_bound(plan: PatchPlan) -> float:
    d = plan.d
    size = sum(g.n for g in plan.gadgets)
    return max(math.sqrt(d - 1) / plan.radius, 2 * d ** 3 * size / plan.host.n)


def patch_certificates(result: PatchResult, k: int | None = None,
                       cfg: SolverConfig = SolverConfig()) -> dict:
    """Compare the top ``k`` eigenvalues of the patched graph with the gadgets' top eigenvalues.

    ``mu`` lists ``d`` followed by the gadgets' largest eigenvalues in
    descending order; ``k`` defaults to ``len(mu)``. Three checks are made:
    ``|lambda_i - mu_{i-1}|`` within the pinning bound, ``lambda_i`` at least
    the corresponding entry of ``(d - deficit, mu_1, ...)``, and
    ``lambda_i <= mu_{i-1} + sqrt(d-1)/R``.
    """
    plan = result.plan
    d = plan.d
    mu = [float(d)] + sorted((float(eigenvalues(g)[0]) for g in plan.gadgets if g.n), reverse=True)
    k = len(mu) if k is None else k
    lam = spectrum(result.graph, k, 0, cfg, vectors=False).eigenvalues
    bound = pinning_bound(plan)
    size = sum(g.n for g in plan.gadgets)
    lower = [d - 2 * d ** 3 * size / plan.host.n] + mu[1:]
    upper_slack = math.sqrt(d - 1) / plan.radius
    rows = []
    for i in range(min(k, len(mu))):
        rows.append({"index": i + 1, "lambda": float(lam[i]), "mu": mu[i],
                     "pin_error": float(abs(lam[i] - mu[i])),
                     "pin_ok": bool(abs(lam[i] - mu[i]) <= bound + GUARD),
                     "lower": lower[i], "lower_ok": bool(lam[i] >= lower[i] - GUARD),
                     "upper": mu[i] + upper_slack, "upper_ok": bool(lam[i] <= mu[i] + upper_slack + GUARD)})
    hg = girth(plan.host)
    host_l2 = float(spectrum(plan.host, 2, 0, cfg, vectors=False).eigenvalues[1])
    return {
        "host_lambda2": host_l2,
        "pinning_bound": bound,
        "rows": rows,
        "pinning_ok": all(r["pin_ok"] for r in rows),
        "lower_ok": all(r["lower_ok"] for r in rows),
        "upper_ok": all(r["upper_ok"] for r in rows),
        "regular": result.graph.is_regular(d),
        "host_girth": hg,
        "host_girth_meets_hypothesis": hg >= 8 * plan.radius,
    }

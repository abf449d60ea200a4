"""A regular graph with a localized second eigenvector.

A gadget whose deep augmentation has top eigenvalue a little above the bulk
edge is augmented to a modest depth and patched into a large near-Ramanujan
host. The host alone has nothing above ``2*sqrt(d-1) + 0.1``, so the second
eigenvalue of the result comes from the gadget and its eigenvector
concentrates on the gadget's vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..augment import augment, bulk_edge, transfer_eigenvalues
from ..graph_core import GenerationPolicy, Graph, girth, random_regular
from ..spectral import SolverConfig, localization_mass, spectrum
from .gadgets import bipartite_gadget
from .patching import patch, plan_patch


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class LocalizedResult:
    graph: Graph
    support: tuple[int, ...]
    eigenvalue: float
    vector: np.ndarray
    mass: float
    girth_achieved: float
    lambda2_achieved: float  # second eigenvalue of the host
    certificates: dict = field(default_factory=dict)


def _restrict(A: sp.csr_matrix, keep: np.ndarray) -> sp.csr_matrix:
    """Adjacency of the induced subgraph on ``keep``, padded back to full size."""
    D = sp.diags(keep.astype(float))
    return (D @ A @ D).tocsr()


def rayleigh_split(g: Graph, v: np.ndarray, gadget: np.ndarray, stars: np.ndarray) -> dict:
    """Split ``v^T A v`` over the star edges, the gadget, and the rest of the host.

    ``gadget`` and ``stars`` are boolean masks. The star part is the induced
    subgraph on ``stars`` (gadget leaves and their host neighbours); the two
    other parts are induced on the gadget and on its complement.
    """
    A = g.adjacency_matrix
    parts = {
        "stars": _restrict(A, stars),
        "gadget": _restrict(A, gadget),
        "host": _restrict(A, ~gadget),
    }
    total = parts["stars"] + parts["gadget"] + parts["host"]
    terms = {k: float(v @ (M @ v)) for k, M in parts.items()}
    return {
        "terms": terms,
        "sum": sum(terms.values()),
        "full": float(v @ (A @ v)),
        "exact_partition": bool((abs(total - A)).sum() == 0),
        "stars_mass": float(np.sum(v[stars] ** 2)),
    }


def localized_graph(d: int = 3, beta: float = 0.3, host_exponent: float = 4.0, seed: int = 0,
                    n0: int = 200, levels: int = 5, host_cap: int = 10000, radius: int = 1,
                    host_ceiling: float = 0.1, cfg: SolverConfig | None = None) -> LocalizedResult:
    """Patch a bipartite-search gadget into a random host and measure its second eigenvector.

    The gadget's deep augmentation is steered into
    ``(edge + beta/2, edge + beta/2 + eps2)`` with ``eps2 = 0.3*beta``,
    shrunk when needed so the window stays below ``d``. It is then augmented
    ``levels`` deep, which sets the support ``S``. The host has
    ``min(|S|**sqrt(host_exponent), host_cap)`` vertices (made even) and
    second eigenvalue at most ``edge + host_ceiling``. Any failing stage is
    re-raised as :class:`StageError` naming the stage.
    """
    if host_exponent < 4:
        raise ValueError("host_exponent must be at least 4")
    cfg = cfg or SolverConfig(method="lanczos")
    edge = bulk_edge(d)
    eps1 = 0.5 * beta
    eps2 = min(0.3 * beta, 0.9 * (d - edge - eps1))
    if eps2 <= 0:
        raise ValueError(f"beta={beta} leaves no room below d={d}")
    try:
        gad = bipartite_gadget(d, eps1, eps2, n0=n0, seed=seed)
    except Exception as exc:
        raise StageError("gadget", exc) from exc
    aug = augment(gad.core, d, levels)
    f1 = aug.graph
    mu1 = transfer_eigenvalues(gad.core, gad.trees, d, levels, k=1)
    n_host = int(min(f1.n ** math.sqrt(host_exponent), host_cap))
    n_host -= n_host % 2
    try:
        host = random_regular(n_host, d, GenerationPolicy(seed=seed + 1, min_girth=6,
                                                          lambda2_ceiling=edge + host_ceiling))
    except Exception as exc:
        raise StageError("host", exc) from exc
    try:
        res = patch(plan_patch(host, [f1], radius, d))
    except Exception as exc:
        raise StageError("patch", exc) from exc
    g = res.graph
    sp_res = spectrum(g, 2, 0, cfg)
    lam = float(sp_res.eigenvalues[1])
    v = sp_res.vectors[:, 1]
    support = tuple(res.gadget_vertices(0))
    in_gadget = np.zeros(g.n, dtype=bool)
    in_gadget[list(support)] = True
    leaves = res.gadget_offsets[0] + np.flatnonzero(f1.degrees == 1)
    stars = np.zeros(g.n, dtype=bool)
    stars[leaves] = True
    for x in leaves:
        stars[[y for y in g.adjacency[x] if not in_gadget[y]]] = True
    split = rayleigh_split(g, v, in_gadget, stars)
    mass = localization_mass(v, support)
    host_l2 = float(spectrum(host, 2, 0, cfg, vectors=False).eigenvalues[1])
    window = (edge + 0.4 * beta, edge + 0.9 * beta)
    cert = {
        "gadget": gad.certificates,
        "gadget_lambda1_deep": gad.lambda1,
        "support_lambda1": mu1[0] if mu1 else edge,
        "levels": levels,
        "host_vertices": n_host,
        "host_lambda2": host_l2,
        "host_lambda2_ok": host_l2 <= edge + host_ceiling + 1e-9,
        "patch_vertices": len(res.plan.patch_vertices),
        "eigenvalue": lam,
        "above_edge": lam > edge + 1e-9,
        "window": list(window),
        "in_window": window[0] < lam < window[1],
        "mass": mass,
        "mass_ok": mass >= 1 - beta,
        "split": split,
        "split_error": abs(split["sum"] - lam),
        "star_term_bound": math.sqrt(d - 1) * split["stars_mass"],
        "star_term_ok": split["terms"]["stars"] <= math.sqrt(d - 1) * split["stars_mass"] + 1e-12,
        "girth": girth(g),
    }
    return LocalizedResult(g, support, lam, v, mass, cert["girth"], host_l2, cert)

"""Tree augmentations and the eigenvalue transfer between a core graph and its
augmentation.

A core graph ``F`` with ``s_v`` pendant trees at vertex ``v`` (each tree: a
root of degree ``d-1`` towards its children, ``levels`` levels deep) has, above
``2*sqrt(d-1)``, only eigenvectors that are constant on every tree level. On
such vectors the tree at ``v`` acts on the core like a diagonal term
``r(lam) * s_v`` with ``r = a_{levels-1} / a_levels``, which reduces the
spectrum above the bulk edge to a scalar root-finding problem per eigenvalue
index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from .graph_core import Graph, GraphError
from .spectral import GUARD


class DegreeExceedsError(GraphError):
    pass


def bulk_edge(d: int) -> float:
    """``2*sqrt(d-1)``, the spectral radius of the infinite ``d``-regular tree."""
    return 2.0 * math.sqrt(d - 1)


@dataclass(frozen=True)
class AugmentationSpec:
    d: int
    s: int | None
    levels: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.s is not None and self.s < 0:
            raise ValueError("s must be non-negative")
        if self.levels < 0:
            raise ValueError("levels must be non-negative")


@dataclass(frozen=True, eq=False)
class AugmentedGraph:
    graph: Graph
    core_size: int
    tree_roots: dict[int, int]  # root -> anchor
    anchor: np.ndarray  # anchor[v] for every vertex; core vertices anchor themselves
    depth: np.ndarray  # 0 on the core, 1 on roots, ``levels`` on the deepest leaves
    spec: AugmentationSpec
    trees_per_vertex: np.ndarray = field(repr=False, default=None)

    @property
    def core_vertices(self) -> range:
        return range(self.core_size)

    @property
    def leaf_count(self) -> int:
        return int(np.sum(self.graph.degrees == 1))

    def to_sidecar(self) -> str:
        data = {
            "core": list(range(self.core_size)),
            "roots": {str(r): int(a) for r, a in sorted(self.tree_roots.items())},
            "levels": self.spec.levels,
            "s": self.spec.s,
            "d": self.spec.d,
        }
        return json.dumps(data, sort_keys=True) + "\n"


def _attach_trees(h: Graph, trees: Sequence[int], d: int, levels: int) -> AugmentedGraph:
    """Attach ``trees[v]`` pendant trees of ``levels`` levels to every core vertex.

    New vertices are numbered level by level, in order of their parent.
    """
    trees = np.asarray(trees, dtype=np.int64)
    n0 = h.n
    adj = [list(r) for r in h.adjacency]
    anchor = list(range(n0))
    depth = [0] * n0
    roots: dict[int, int] = {}
    frontier: list[int] = []
    if levels >= 1:
        for v in range(n0):
            for _ in range(int(trees[v])):
                x = len(adj)
                adj.append([v])
                adj[v].append(x)
                anchor.append(v)
                depth.append(1)
                roots[x] = v
                frontier.append(x)
    for lev in range(2, levels + 1):
        nxt = []
        for p in frontier:
            for _ in range(d - 1):
                x = len(adj)
                adj.append([p])
                adj[p].append(x)
                anchor.append(anchor[p])
                depth.append(lev)
                nxt.append(x)
        frontier = nxt
    g = Graph(len(adj), tuple(tuple(sorted(r)) for r in adj))
    spec = AugmentationSpec(d, None, levels)
    return AugmentedGraph(g, n0, roots, np.array(anchor), np.array(depth), spec, trees)


def augment_once(h: Graph, d: int) -> AugmentedGraph:
    """Give every vertex of degree below ``d`` that many new pendant leaves."""
    return augment(h, d, 1)


def augment(h: Graph, d: int, levels: int) -> AugmentedGraph:
    """``levels``-fold iterated ``d``-augmentation of ``h``."""
    if h.n and h.max_degree > d:
        raise DegreeExceedsError(f"max degree {h.max_degree} exceeds d={d}")
    return _attach_trees(h, d - h.degrees, d, levels)


def augment_s(f: Graph, spec: AugmentationSpec, allow_excess: bool = False) -> AugmentedGraph:
    """Join ``spec.s`` disjoint ``d``-ary trees of ``spec.levels`` levels to every vertex.

    Core degrees may end up above ``d`` only when ``allow_excess`` is set;
    the tree part still has maximum degree ``d``.
    """
    if spec.s is None:
        raise ValueError("augment_s needs an explicit s")
    if not allow_excess and f.n and spec.levels >= 1 and f.max_degree + spec.s > spec.d:
        raise DegreeExceedsError(
            f"core degree {f.max_degree} + s={spec.s} exceeds d={spec.d}")
    out = _attach_trees(f, [spec.s] * f.n, spec.d, spec.levels)
    return AugmentedGraph(out.graph, out.core_size, out.tree_roots, out.anchor, out.depth,
                          spec, out.trees_per_vertex)


def tree_size(d: int, levels: int) -> int:
    return sum((d - 1) ** i for i in range(levels))


# ---------------------------------------------------------- secular function
class AiValue(NamedTuple):
    value: float
    closed_form: float | None  # None when the discriminant is not positive


def ai_recurrence(lam: float, d: int, i: int) -> float:
    prev, cur = 1.0, lam
    if i == 0:
        return prev
    for _ in range(i - 1):
        prev, cur = cur, lam * cur - (d - 1) * prev
    return cur


def ai_closed(lam: float, d: int, i: int) -> float:
    disc = lam * lam - 4 * (d - 1)
    if disc <= 0:
        raise ValueError("closed form needs lam > 2*sqrt(d-1)")
    root = math.sqrt(disc)
    a, b = (lam + root) / 2, (lam - root) / 2
    return (a ** (i + 1) - b ** (i + 1)) / (a - b)


def ai(lam: float, d: int, i: int) -> AiValue:
    """``a_i(lam)`` by the three-term recurrence, with the closed form alongside
    when ``lam > 2*sqrt(d-1)``."""
    if i < 0:
        raise ValueError("index must be non-negative")
    rec = ai_recurrence(lam, d, i)
    try:
        closed = ai_closed(lam, d, i)
    except ValueError:
        closed = None
    return AiValue(rec, closed)


def tree_ratio(lam: float, d: int, levels: int) -> float:
    """``a_{levels-1}(lam) / a_levels(lam)`` as a continued fraction.

    Avoids overflow of the individual ``a_i`` for deep trees. Zero for
    ``levels == 0`` (no tree).
    """
    if levels <= 0:
        return 0.0
    r = 1.0 / lam
    for _ in range(levels - 1):
        r = 1.0 / (lam - (d - 1) * r)
    return r


class SecularFunction:
    """``h(lam) = lam - s * a_{levels-1}/a_levels`` with a per-instance cache of ``a_i``."""

    def __init__(self, d: int, s: int, levels: int):
        self.d, self.s, self.levels = d, s, levels
        self._cache: dict[float, list[float]] = {}

    def a(self, lam: float, i: int) -> float:
        seq = self._cache.get(lam)
        if seq is None:
            seq = [1.0, lam]
            self._cache[lam] = seq
        while len(seq) <= i:
            seq.append(lam * seq[-1] - (self.d - 1) * seq[-2])
        return seq[i]

    def __call__(self, lam: float) -> float:
        return lam - self.s * tree_ratio(lam, self.d, self.levels)


def secular_solve(mu1: float, d: int, s: int, levels: int) -> float | None:
    """The root ``lam > 2*sqrt(d-1)`` of ``h(lam) = mu1``, or None if there is none.

    A 1024-point sign scan locates a bracket, then bisection runs to 1e-12.
    """
    edge = bulk_edge(d)
    if s == 0 or levels == 0:
        return float(mu1) if mu1 > edge + GUARD else None
    h = SecularFunction(d, s, levels)
    lo = edge + 1e-9
    hi = max(d + s, mu1 + s + 1.0)
    grid = np.linspace(lo, hi, 1024)
    vals = [h(x) - mu1 for x in grid]
    for k in range(len(grid) - 1):
        if vals[k] == 0:
            return float(grid[k])
        if vals[k] < 0 < vals[k + 1]:
            a, b = grid[k], grid[k + 1]
            while b - a > 1e-12:
                m = 0.5 * (a + b)
                if h(m) - mu1 < 0:
                    a = m
                else:
                    b = m
            return float(0.5 * (a + b))
    if vals[-1] == 0:
        return float(grid[-1])
    return None


def lambda2_ceiling_after_augment(lambda2_core: float, d: int, s: int, eps: float) -> tuple[float, bool]:
    """Core threshold below which the augmentation's second eigenvalue stays
    under ``2*sqrt(d-1+eps)``; returns ``(threshold, lambda2_core < threshold)``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    root = math.sqrt(d - 1 + eps)
    threshold = 2 * root - s / (root + math.sqrt(eps))
    return threshold, lambda2_core < threshold


# ------------------------------------------------------- radial eigenvectors
def radial_extension(core_vec: Sequence[float], lam: float, aug: AugmentedGraph) -> np.ndarray:
    """Extend a core vector to the augmentation, level values ``v(anchor)*a_i/a_levels``.

    ``i`` is the distance from the tree's leaf level. When ``core_vec`` is an
    eigenvector of the core for ``h(lam)``, the result is an eigenvector of
    the augmentation for ``lam``.
    """
    d, levels = aug.spec.d, aug.spec.levels
    core_vec = np.asarray(core_vec, dtype=float)
    if len(core_vec) != aug.core_size:
        raise ValueError("core vector length does not match the core")
    if aug.graph.n == aug.core_size:
        return core_vec.copy()
    if lam <= bulk_edge(d):
        raise ValueError("radial extension needs lam > 2*sqrt(d-1)")
    a = [ai_recurrence(lam, d, i) for i in range(levels + 1)]
    scale = np.array([a[levels - t] / a[levels] if t > 0 else 1.0 for t in range(levels + 1)])
    return core_vec[aug.anchor] * scale[aug.depth]


# ------------------------------------------------- spectrum above the bulk edge
def _kth_eigenvalue(A, k: int) -> float:
    """``k``-th largest eigenvalue of a symmetric matrix (dense or sparse)."""
    n = A.shape[0]
    if sp.issparse(A):
        if k == 1 and n > 200:
            w = eigsh(A, k=1, which="LA", v0=np.ones(n), tol=0)[0]
            return float(w[0])
        A = A.toarray()
    if n > 64:
        return float(eigh(A, eigvals_only=True, subset_by_index=[n - k, n - k])[0])
    return float(np.linalg.eigvalsh(A)[n - k])


def transfer_eigenvalues(core: Graph, trees: Sequence[int], d: int, levels: int,
                         k: int | None = None) -> list[float]:
    """Eigenvalues above ``2*sqrt(d-1)`` of ``core`` with ``trees[v]`` pendant
    ``levels``-level trees at ``v``, found without building the trees.

    For each index ``j`` the map ``lam -> lambda_j(A + r(lam) diag(trees)) - lam``
    is strictly decreasing, so each index contributes at most one root.
    Returns at most ``k`` values (all of them by default), descending.
    """
    edge = bulk_edge(d)
    s = np.asarray(trees, dtype=float)
    n = core.n
    k = n if k is None else min(k, n)
    A = core.adjacency_matrix if (k == 1 and n > 200) else core.dense()
    if levels == 0 or not s.any():
        w = [_kth_eigenvalue(A, j) for j in range(1, k + 1)]
        return [float(x) for x in w if x > edge + GUARD]
    lo = edge + 1e-12
    top = _kth_eigenvalue(A, 1)
    diag = sp.diags if sp.issparse(A) else np.diag
    out = []
    for j in range(1, k + 1):
        def g(lam, j=j):
            return _kth_eigenvalue(A + diag(tree_ratio(lam, d, levels) * s), j) - lam

        if g(lo) <= 0:
            break
        hi = top + s.max() * tree_ratio(lo, d, levels) + 1.0
        out.append(float(brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)))
    return out


def augmented_top_eigenvalues(h: Graph, d: int, levels: int, k: int = 1) -> list[float]:
    """Top eigenvalues of the ``levels``-fold ``d``-augmentation of ``h`` above the bulk edge."""
    return transfer_eigenvalues(h, d - h.degrees, d, levels, k)


def transfer_eigenvector(core: Graph, trees: Sequence[int], d: int, levels: int,
                         lam: float, index: int = 1) -> np.ndarray:
    """Core part of the eigenvector for a transfer eigenvalue ``lam`` (unit norm)."""
    s = np.asarray(trees, dtype=float)
    M = core.dense() + np.diag(tree_ratio(lam, d, levels) * s)
    w, V = np.linalg.eigh(M)
    x = V[:, core.n - index]
    return x / np.linalg.norm(x)


def level_quotient(core: Graph, trees: Sequence[int], d: int, levels: int) -> sp.csr_matrix:
    """Symmetric matrix of the augmentation restricted to level-constant vectors.

    Rows ``0..n-1`` are the core; then, for every core vertex with trees,
    one row per level (unit vector spread evenly over that level of all its
    trees). The core-to-root weight is ``sqrt(trees[v])`` and consecutive
    levels couple with weight ``sqrt(d-1)``.
    """
    trees = np.asarray(trees, dtype=np.int64)
    n = core.n
    e = core.edge_array
    rows = list(e[:, 0]) + list(e[:, 1])
    cols = list(e[:, 1]) + list(e[:, 0])
    vals = [1.0] * (2 * len(e))
    nxt = n
    c = math.sqrt(d - 1)
    for v in range(n):
        if trees[v] == 0 or levels == 0:
            continue
        prev, w = v, math.sqrt(trees[v])
        for _ in range(levels):
            rows += [prev, nxt]
            cols += [nxt, prev]
            vals += [w, w]
            prev, w = nxt, c
            nxt += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(nxt, nxt))

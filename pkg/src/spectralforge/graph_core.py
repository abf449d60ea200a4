"""Undirected simple graphs, random generators, structural queries and surgery.

Graphs are immutable. Every surgery returns a new :class:`Graph`; vertex ids
are always dense ``0..n-1``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

INF = math.inf


class GraphError(ValueError):
    """Invalid graph data or an operation whose preconditions fail."""


class ParityError(GraphError):
    pass


class RetriesExhausted(RuntimeError):
    """A generate-and-test loop hit ``max_retries`` without a valid sample."""


class EdgesNotDisjoint(GraphError):
    pass


class ReplacementEdgeExists(GraphError):
    pass


class MissingEdge(GraphError):
    pass


class Edge(NamedTuple):
    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int) -> "Edge":
        if a == b:
            raise GraphError(f"self-loop {a}-{b}")
        return cls(a, b) if a < b else cls(b, a)


@dataclass(frozen=True, eq=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.n:
            raise GraphError("adjacency length does not match n")

    # ------------------------------------------------------------------ build
    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for a, b in edges:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"edge ({a},{b}) out of range for n={n}")
            if a == b:
                raise GraphError(f"self-loop at {a}")
            if b in nbrs[a]:
                raise GraphError(f"duplicate edge ({min(a, b)},{max(a, b)})")
            nbrs[a].add(b)
            nbrs[b].add(a)
        return cls._from_sets(nbrs)

    @classmethod
    def _from_sets(cls, nbrs: Sequence[Iterable[int]]) -> "Graph":
        return cls(len(nbrs), tuple(tuple(sorted(s)) for s in nbrs))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, tuple(() for _ in range(n)))

    # ---------------------------------------------------------------- queries
    @cached_property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """All edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        return tuple(Edge(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    @cached_property
    def edge_array(self) -> np.ndarray:
        arr = np.array(self.edges, dtype=np.int64)
        return arr.reshape(-1, 2)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, a: int, b: int) -> bool:
        row = self.adjacency[a]
        i = np.searchsorted(row, b) if len(row) > 16 else None
        if i is None:
            return b in row
        return i < len(row) and row[i] == b

    def is_regular(self, d: int | None = None) -> bool:
        if self.n == 0:
            return True
        degs = self.degrees
        target = degs[0] if d is None else d
        return bool(np.all(degs == target))

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        """Sparse float64 adjacency matrix."""
        e = self.edge_array
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        return self.adjacency_matrix.toarray()

    def validate(self) -> None:
        """Raise :class:`GraphError` unless symmetric, simple and sorted."""
        for u, row in enumerate(self.adjacency):
            if list(row) != sorted(set(row)):
                raise GraphError(f"neighbour list of {u} not sorted/unique")
            for v in row:
                if v == u:
                    raise GraphError(f"self-loop at {u}")
                if not 0 <= v < self.n:
                    raise GraphError(f"neighbour {v} of {u} out of range")
                if u not in self.adjacency[v]:
                    raise GraphError(f"asymmetric edge {u}->{v}")
        if 2 * self.edge_count != int(self.degrees.sum()):
            raise GraphError("edge count inconsistent with degrees")

    def components(self) -> list[list[int]]:
        if self.n == 0:
            return []
        k, labels = csgraph.connected_components(self.adjacency_matrix, directed=False)
        comps: list[list[int]] = [[] for _ in range(k)]
        for v, c in enumerate(labels):
            comps[c].append(v)
        return sorted(comps, key=lambda c: c[0])

    def is_connected(self) -> bool:
        return self.n > 0 and len(self.components()) == 1

    def induced_subgraph(self, keep: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """Induced subgraph on ``keep``; returns the graph and ``old_labels``
        (``old_labels[new] == old``), order preserved."""
        kept = tuple(sorted(set(int(v) for v in keep)))
        index = {old: new for new, old in enumerate(kept)}
        nbrs = [[index[w] for w in self.adjacency[old] if w in index] for old in kept]
        return Graph(len(kept), tuple(tuple(r) for r in nbrs)), kept

    def with_edges(self, add: Iterable[Sequence[int]] = (), remove: Iterable[Sequence[int]] = ()) -> "Graph":
        nbrs = [set(a) for a in self.adjacency]
        for a, b in remove:
            if b not in nbrs[a]:
                raise MissingEdge(f"edge ({a},{b}) not present")
            nbrs[a].discard(b)
            nbrs[b].discard(a)
        for a, b in add:
            if a == b or b in nbrs[a]:
                raise GraphError(f"cannot add edge ({a},{b})")
            nbrs[a].add(b)
            nbrs[b].add(a)
        return Graph._from_sets(nbrs)


def disjoint_union(*graphs: Graph) -> tuple[Graph, list[int]]:
    """Vertex-disjoint union; returns the graph and each part's label offset."""
    rows: list[tuple[int, ...]] = []
    offsets = []
    off = 0
    for g in graphs:
        offsets.append(off)
        rows.extend(tuple(w + off for w in r) for r in g.adjacency)
        off += g.n
    return Graph(off, tuple(rows)), offsets


# ---------------------------------------------------------------- named graphs
def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((a, b) for a in range(n) for b in range(a + 1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


# ------------------------------------------------------------------ structure
def _bfs_distances(adjacency, sources: Iterable[int], limit: float = INF,
                   banned: tuple[int, int] | None = None) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(dist)
    while queue:
        x = queue.popleft()
        dx = dist[x]
        if dx >= limit:
            continue
        for y in adjacency[x]:
            if banned is not None and ((x, y) == banned or (y, x) == banned):
                continue
            if y not in dist:
                dist[y] = dx + 1
                queue.append(y)
    return dist


def distances_from(g: Graph, sources: Iterable[int], limit: float = INF) -> dict[int, int]:
    """Hop distances from a source set, optionally truncated at ``limit``."""
    return _bfs_distances(g.adjacency, sources, limit)


def _block_bfs(A: sp.csr_matrix, roots: np.ndarray, far: int, depth_cap: float = INF) -> np.ndarray:
    """Hop distances from each root (one row per root), ``far`` beyond reach or cap."""
    n = A.shape[0]
    D = np.full((len(roots), n), far, dtype=np.int32)
    frontier = np.zeros((n, len(roots)), dtype=np.float32)
    frontier[roots, np.arange(len(roots))] = 1.0
    seen = frontier > 0
    D[np.arange(len(roots)), roots] = 0
    k = 0
    while frontier.any() and k < depth_cap:
        k += 1
        reach = (A @ frontier) > 0
        new = reach & ~seen
        seen |= new
        D[new.T] = k
        frontier = new.astype(np.float32)
    return D


def _girth_scan(g: Graph, odd_only: bool, block: int = 256) -> float:
    """Exact (odd) girth from BFS distances out of every root.

    Rooted at a vertex of a shortest cycle, an odd cycle shows up as an edge
    inside one BFS level and an even one as a vertex with two parents.
    """
    if g.edge_count == 0:
        return INF
    A = g.adjacency_matrix
    e = g.edge_array
    m = len(e)
    U = np.concatenate([e[:, 0], e[:, 1]])
    V = np.concatenate([e[:, 1], e[:, 0]])
    heads_t = sp.csr_matrix((np.ones(2 * m, dtype=np.float32), (V, np.arange(2 * m))),
                            shape=(g.n, 2 * m))
    far = np.int32(1 << 30)
    best = INF
    for start in range(0, g.n, block):
        roots = np.arange(start, min(start + block, g.n))
        Di = _block_bfs(A, roots, far, depth_cap=best / 2 + 1)
        DU = Di[:, U]
        DV = Di[:, V]
        same = (DU[:, :m] == DV[:, :m]) & (DU[:, :m] < far)
        if same.any():
            best = min(best, float(2 * DU[:, :m][same].min() + 1))
        if not odd_only:
            parent = (DU + 1 == DV).astype(np.float32)
            counts = (heads_t @ parent.T).T
            two = counts >= 2
            if two.any():
                best = min(best, float(2 * Di[two].min()))
    return int(best) if best < INF else INF


def girth(g: Graph) -> float:
    """Length of a shortest cycle; ``math.inf`` for forests."""
    return _girth_scan(g, odd_only=False)


def odd_girth(g: Graph) -> float:
    """Length of a shortest odd cycle; ``math.inf`` iff bipartite."""
    return _girth_scan(g, odd_only=True)


def shortest_cycle_through(g: Graph, a: int, b: int, limit: float = INF) -> float:
    """Length of a shortest cycle using edge ``ab`` (``inf`` if none within limit)."""
    dist = _bfs_distances(g.adjacency, [a], limit=limit, banned=(a, b))
    return dist[b] + 1 if b in dist else INF


def edge_distance(g: Graph, e1: Sequence[int], e2: Sequence[int]) -> float:
    """Minimum hop distance between the endpoint sets of two present edges."""
    for a, b in (e1, e2):
        if not g.has_edge(a, b):
            raise MissingEdge(f"edge ({a},{b}) not present")
    targets = set(e2)
    if targets & set(e1):
        return 0
    dist = {v: 0 for v in e1}
    queue = deque(dist)
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                if y in targets:
                    return dist[y]
                queue.append(y)
    return INF


# --------------------------------------------------------------------- surgery
def swap(g: Graph, e1: Sequence[int], e2: Sequence[int]) -> Graph:
    """Delete ``v1v2`` and ``u1u2``, add ``v1u1`` and ``v2u2``.

    ``e1 = (v1, v2)`` and ``e2 = (u1, u2)`` are oriented: the orientation picks
    which of the two possible re-pairings is made.
    """
    v1, v2 = e1
    u1, u2 = e2
    for a, b in (e1, e2):
        if not g.has_edge(a, b):
            raise MissingEdge(f"edge ({a},{b}) not present")
    if len({v1, v2, u1, u2}) < 4:
        raise EdgesNotDisjoint(f"edges {tuple(e1)} and {tuple(e2)} share a vertex")
    if g.has_edge(v1, u1) or g.has_edge(v2, u2):
        raise ReplacementEdgeExists(f"replacement edge already present for {tuple(e1)}, {tuple(e2)}")
    return g.with_edges(add=[(v1, u1), (v2, u2)], remove=[(v1, v2), (u1, u2)])


def delete_vertex(g: Graph, v: int) -> tuple[Graph, tuple[int, ...]]:
    """Remove ``v``; returns the relabelled graph and ``old_labels``."""
    if not 0 <= v < g.n:
        raise GraphError(f"vertex {v} out of range for n={g.n}")
    return g.induced_subgraph(w for w in range(g.n) if w != v)


@dataclass(frozen=True)
class Bisection:
    part_b: frozenset[int]
    part_c: frozenset[int]
    crossing_count: int

    def side(self, n: int) -> np.ndarray:
        """``+1`` on B, ``-1`` on C."""
        s = -np.ones(n)
        s[list(self.part_b)] = 1.0
        return s

    def is_crossing(self, a: int, b: int) -> bool:
        return (a in self.part_b) != (b in self.part_b)


def crossing_count(g: Graph, part_b: Iterable[int]) -> int:
    b = set(part_b)
    return sum(1 for u, v in g.edges if (u in b) != (v in b))


def make_bisection(g: Graph, part_b: Iterable[int]) -> Bisection:
    b = frozenset(int(x) for x in part_b)
    c = frozenset(range(g.n)) - b
    return Bisection(b, c, crossing_count(g, b))


def bisect(g: Graph, seed: int) -> Bisection:
    """Seeded uniform split into two halves of equal size."""
    if g.n % 2:
        raise GraphError(f"cannot bisect an odd vertex count ({g.n})")
    perm = np.random.default_rng(seed).permutation(g.n)
    return make_bisection(g, perm[: g.n // 2].tolist())


# ------------------------------------------------------------------ generation
@dataclass(frozen=True)
class GenerationPolicy:
    seed: int = 0
    min_girth: int | None = None
    max_retries: int = 1000
    lambda2_ceiling: float | None = None

    def __post_init__(self):
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


def _pair_stubs(n: int, d: int, rng: np.random.Generator, sides: int = 1) -> list[set[int]] | None:
    """Random simple pairing of stubs (local rejection, whole restart when stuck).

    With ``sides=2`` the graph is bipartite between ``0..n/2-1`` and the rest.
    """
    adj: list[set[int]] = [set() for _ in range(n)]
    if sides == 1:
        pools = [np.repeat(np.arange(n), d).tolist()]
    else:
        half = n // 2
        pools = [np.repeat(np.arange(half), d).tolist(), np.repeat(np.arange(half, n), d).tolist()]
    while pools[0]:
        fails = 0
        while True:
            if sides == 1:
                pool = pools[0]
                i, j = rng.integers(len(pool), size=2)
                a, b = pool[i], pool[j]
                ok = i != j and a != b and b not in adj[a]
            else:
                i = rng.integers(len(pools[0]))
                j = rng.integers(len(pools[1]))
                a, b = pools[0][i], pools[1][j]
                ok = b not in adj[a]
            if ok:
                break
            fails += 1
            if fails > 100:
                return None
        adj[a].add(b)
        adj[b].add(a)
        if sides == 1:
            pool = pools[0]
            for k in sorted((int(i), int(j)), reverse=True):
                pool[k] = pool[-1]
                pool.pop()
        else:
            for pool, k in ((pools[0], int(i)), (pools[1], int(j))):
                pool[k] = pool[-1]
                pool.pop()
    return adj


def _short_cycle_edge(adj, a: int, b: int, min_girth: int) -> bool:
    dist = _bfs_distances(adj, [a], limit=min_girth - 2, banned=(a, b))
    return b in dist


def repair_short_cycles(adj: list[set[int]], min_girth: int, rng: np.random.Generator,
                        labels: Sequence[int] | None = None, max_swaps: int | None = None) -> bool:
    """Break every cycle shorter than ``min_girth`` with degree-preserving swaps.

    Each accepted swap removes an edge on a short cycle and creates no new
    short cycle, so the number of short cycles strictly decreases. ``labels``
    (sides of a bipartition, or fibres of a lift) restricts swaps to ones that
    keep every edge between the same pair of label classes. Works in place.
    """
    if min_girth <= 3:
        return True
    edges = [(a, b) for a in range(len(adj)) for b in adj[a] if a < b]
    where = {e: i for i, e in enumerate(edges)}

    def drop(e):
        i = where.pop(e)
        last = edges.pop()
        if i < len(edges):
            edges[i] = last
            where[last] = i

    def push(a, b):
        e = (a, b) if a < b else (b, a)
        where[e] = len(edges)
        edges.append(e)

    def lab(x):
        return None if labels is None else labels[x]

    todo = [e for e in edges if _short_cycle_edge(adj, e[0], e[1], min_girth)]
    budget = max_swaps if max_swaps is not None else 50 * len(edges) + 100
    while todo:
        a, b = todo.pop()
        if (a, b) not in where or not _short_cycle_edge(adj, a, b, min_girth):
            continue
        near = _bfs_distances(adj, [a, b], limit=min_girth - 2)
        key = frozenset((lab(a), lab(b)))
        done = False
        for _ in range(200):
            budget -= 1
            if budget < 0:
                return False
            c, e = edges[int(rng.integers(len(edges)))]
            if c in near or e in near:
                continue
            if labels is not None and frozenset((lab(c), lab(e))) != key:
                continue
            options = [(c, e), (e, c)]
            if rng.random() < 0.5:
                options.reverse()
            for x, y in options:
                # add a-x and b-y
                if labels is not None and (frozenset((lab(a), lab(x))) != key
                                           or frozenset((lab(b), lab(y))) != key):
                    continue
                adj[a].discard(b); adj[b].discard(a)
                adj[c].discard(e); adj[e].discard(c)
                adj[a].add(x); adj[x].add(a)
                adj[b].add(y); adj[y].add(b)
                if (_short_cycle_edge(adj, a, x, min_girth)
                        or _short_cycle_edge(adj, b, y, min_girth)):
                    adj[a].discard(x); adj[x].discard(a)
                    adj[b].discard(y); adj[y].discard(b)
                    adj[a].add(b); adj[b].add(a)
                    adj[c].add(e); adj[e].add(c)
                    continue
                drop((a, b))
                drop((c, e) if c < e else (e, c))
                push(a, x)
                push(b, y)
                done = True
                break
            if done:
                break
        if not done:
            return False
    return True


def _lambda2(g: Graph) -> float:
    from .spectral import SolverConfig, spectrum

    return float(spectrum(g, 2, 0, SolverConfig(), vectors=False).eigenvalues[1])


def _accept(g: Graph, policy: GenerationPolicy) -> bool:
    if policy.min_girth is not None and girth(g) < policy.min_girth:
        return False
    if policy.lambda2_ceiling is not None and _lambda2(g) > policy.lambda2_ceiling:
        return False
    return True


def random_regular(n: int, d: int, policy: GenerationPolicy = GenerationPolicy(),
                   bipartite: bool = False) -> Graph:
    """Random ``d``-regular simple graph, deterministic in ``(n, d, policy)``.

    Stubs are paired with local rejection of loops and multi-edges; cycles
    shorter than ``policy.min_girth`` are removed by swaps; the ``lambda2``
    ceiling is enforced by regenerating. ``bipartite=True`` yields a bipartite
    graph with sides ``0..n/2-1`` and ``n/2..n-1``.
    """
    if d < 2 or d >= n:
        raise GraphError(f"need 2 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise ParityError(f"n*d must be even (n={n}, d={d})")
    if bipartite and (n % 2 or d > n // 2):
        raise GraphError("bipartite regular graph needs even n and d <= n/2")
    rng = np.random.default_rng(policy.seed)
    labels = [0] * (n // 2) + [1] * (n - n // 2) if bipartite else None
    for _ in range(policy.max_retries):
        adj = _pair_stubs(n, d, rng, sides=2 if bipartite else 1)
        if adj is None:
            continue
        if policy.min_girth is not None and not repair_short_cycles(adj, policy.min_girth, rng, labels):
            continue
        g = Graph._from_sets(adj)
        if _accept(g, policy):
            return g
    raise RetriesExhausted(
        f"no {d}-regular graph on {n} vertices met the policy in {policy.max_retries} tries")


def random_lift(base: Graph, N: int, seed: int, min_girth: int | None = None,
                max_retries: int = 1000) -> Graph:
    """Random ``N``-lift: vertex ``(v, i)`` gets id ``v*N + i``.

    Each base edge ``ab`` (``a < b``) becomes the matching ``(a,i)-(b,pi(i))``
    for a seeded random permutation ``pi``. With ``min_girth`` set, short
    cycles are removed by transpositions inside single matchings, so the
    result is still a lift of ``base``.
    """
    if N < 1:
        raise GraphError("lift fold N must be >= 1")
    base.validate()
    rng = np.random.default_rng(seed)
    labels = [v for v in range(base.n) for _ in range(N)]
    for _ in range(max_retries):
        adj: list[set[int]] = [set() for _ in range(base.n * N)]
        for a, b in base.edges:
            perm = rng.permutation(N)
            for i in range(N):
                x, y = a * N + i, b * N + int(perm[i])
                adj[x].add(y)
                adj[y].add(x)
        if min_girth is not None and not repair_short_cycles(adj, min_girth, rng, labels):
            continue
        g = Graph._from_sets(adj)
        if min_girth is None or girth(g) >= min_girth:
            return g
    raise RetriesExhausted(f"no {N}-lift with girth >= {min_girth} in {max_retries} tries")


def lift_projection(lift: Graph, N: int) -> Graph:
    """Quotient a lift by its fibres ``v*N .. v*N+N-1``."""
    edges = {(min(a // N, b // N), max(a // N, b // N)) for a, b in lift.edges}
    return Graph.from_edges(lift.n // N, sorted(edges))

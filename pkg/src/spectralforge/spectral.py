"""Eigenpairs of adjacency operators and the spectral measurements built on them.

Two solver paths are available: a dense symmetric solve (LAPACK through
scipy) and a hand-written Lanczos iteration with full reorthogonalization.
The Lanczos path locks each converged extreme pair and restarts in the
orthogonal complement, so repeated eigenvalues are recovered one copy at a
time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .graph_core import Graph, distances_from, girth

GUARD = 1e-9


class ConvergenceError(RuntimeError):
    """Iterative solve stopped above tolerance; ``residuals`` holds what it reached."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    dense_cutoff: int = 4096
    max_iterations: int | None = None
    seed: int = 0
    method: str = "auto"  # "auto", "dense" or "lanczos"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.method not in ("auto", "dense", "lanczos"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    method: str
    vectors: np.ndarray | None = None  # columns aligned with eigenvalues
    k_top: int = 0

    @property
    def top(self) -> np.ndarray:
        return self.eigenvalues[: self.k_top]

    @property
    def bottom(self) -> np.ndarray:
        """Bottom eigenvalues, in descending order like the rest."""
        return self.eigenvalues[self.k_top:]

    def to_json(self) -> str:
        data = {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "method": self.method,
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    def vectors_csv(self) -> str:
        if self.vectors is None:
            raise ValueError("spectrum was computed without vectors")
        rows = [",".join(repr(float(x)) for x in row) for row in self.vectors]
        return "\n".join(rows) + "\n"


def _as_operator(g):
    if isinstance(g, Graph):
        return g.adjacency_matrix
    return g


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    """First entry with magnitude above 1e-12 made positive, column by column."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if len(nz) and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def _residuals(A, values, vectors) -> np.ndarray:
    if len(values) == 0:
        return np.zeros(0)
    R = A @ vectors - vectors * values
    return np.linalg.norm(R, axis=0)


def _dense_pairs(A, k_top: int, k_bottom: int):
    n = A.shape[0]
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if k_top + k_bottom >= n // 2:
        w, V = np.linalg.eigh(M)
        idx = list(range(n - 1, n - 1 - k_top, -1)) + list(range(k_bottom - 1, -1, -1))
        return w[idx], V[:, idx]
    vals, vecs = [], []
    if k_top:
        w, V = sla.eigh(M, subset_by_index=[n - k_top, n - 1])
        vals.append(w[::-1])
        vecs.append(V[:, ::-1])
    if k_bottom:
        w, V = sla.eigh(M, subset_by_index=[0, k_bottom - 1])
        vals.append(w[::-1])
        vecs.append(V[:, ::-1])
    return np.concatenate(vals), np.hstack(vecs)


def _lanczos_extreme(A, locked: np.ndarray, rng: np.random.Generator, tol: float,
                     max_iter: int, sign: float):
    """Largest eigenpair of ``sign*A`` restricted to the complement of ``locked``."""
    n = A.shape[0]
    free = n - locked.shape[1]
    m_cap = min(free, max_iter)

    def project(x):
        if locked.shape[1]:
            x = x - locked @ (locked.T @ x)
            x = x - locked @ (locked.T @ x)
        return x

    def fresh(Q_used):
        for _ in range(10):
            x = project(rng.standard_normal(n))
            if Q_used:
                Qm = np.column_stack(Q_used)
                x = x - Qm @ (Qm.T @ x)
                x = x - Qm @ (Qm.T @ x)
            nrm = np.linalg.norm(x)
            if nrm > 1e-8:
                return x / nrm
        return None

    Q: list[np.ndarray] = []
    alphas: list[float] = []
    betas: list[float] = []  # betas[j] couples Q[j] and Q[j+1]
    q = fresh(Q)
    theta, y = None, None
    while q is not None:
        Q.append(q)
        w = sign * (A @ q)
        alphas.append(float(q @ w))
        Qm = np.column_stack(Q)
        w = project(w)
        w = w - Qm @ (Qm.T @ w)
        w = w - Qm @ (Qm.T @ w)
        beta = float(np.linalg.norm(w))
        k = len(Q)
        done = k >= m_cap
        if k % 5 == 0 or done or beta < 1e-10:
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            tw, tv = np.linalg.eigh(T)
            theta, y = tw[-1], tv[:, -1]
            if done or abs(beta * y[-1]) < 0.1 * tol:
                x = Qm @ y
                x /= np.linalg.norm(x)
                res = np.linalg.norm(sign * (A @ x) - theta * x)
                if res <= tol or done:
                    return sign * theta, x, res
        if done:
            break
        if beta < 1e-10:
            betas.append(0.0)
            q = fresh(Q)
        else:
            betas.append(beta)
            q = w / beta
    T = np.diag(alphas) + np.diag(betas[: len(alphas) - 1], 1) + np.diag(betas[: len(alphas) - 1], -1)
    tw, tv = np.linalg.eigh(T)
    x = np.column_stack(Q) @ tv[:, -1]
    x /= np.linalg.norm(x)
    return sign * tw[-1], x, float(np.linalg.norm(sign * (A @ x) - tw[-1] * x))


def _lanczos_pairs(A, k_top: int, k_bottom: int, cfg: SolverConfig):
    n = A.shape[0]
    rng = np.random.default_rng(cfg.seed)
    max_iter = cfg.max_iterations or n
    locked = np.zeros((n, 0))
    top_vals, top_vecs, bot_vals, bot_vecs = [], [], [], []
    worst = 0.0
    for sign, vals, vecs, count in ((1.0, top_vals, top_vecs, k_top), (-1.0, bot_vals, bot_vecs, k_bottom)):
        for _ in range(count):
            lam, x, res = _lanczos_extreme(A, locked, rng, cfg.tol, max_iter, sign)
            worst = max(worst, res)
            vals.append(lam)
            vecs.append(x)
            locked = np.column_stack([locked, x])
    values = np.array(top_vals + bot_vals[::-1])
    vectors = np.column_stack(top_vecs + bot_vecs[::-1]) if values.size else np.zeros((n, 0))
    return values, vectors


def spectrum(g, k_top: int, k_bottom: int = 0, cfg: SolverConfig = SolverConfig(),
             vectors: bool = True) -> Spectrum:
    """Top ``k_top`` and bottom ``k_bottom`` eigenpairs, all in descending order.

    ``g`` may be a :class:`Graph` or any real symmetric (sparse) matrix.
    Raises :class:`ConvergenceError` when a residual exceeds ``cfg.tol``.
    """
    A = _as_operator(g)
    n = A.shape[0]
    if k_top < 0 or k_bottom < 0 or k_top + k_bottom > n:
        raise ValueError(f"cannot take {k_top}+{k_bottom} eigenpairs of an order-{n} operator")
    method = cfg.method
    if method == "auto":
        method = "dense" if n <= cfg.dense_cutoff else "lanczos"
    if method == "dense":
        values, vecs = _dense_pairs(A, k_top, k_bottom)
    else:
        values, vecs = _lanczos_pairs(A, k_top, k_bottom, cfg)
    vecs = _sign_fix(vecs)
    res = _residuals(A, values, vecs)
    if np.any(res > cfg.tol):
        raise ConvergenceError(
            f"{method} solve reached residual {res.max():.3e} > tol {cfg.tol:.1e}", res)
    return Spectrum(values, res, method, vecs if vectors else None, k_top)


def eigenvalues(g, cfg: SolverConfig = SolverConfig()) -> np.ndarray:
    """All eigenvalues in descending order (dense)."""
    A = _as_operator(g)
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    return np.linalg.eigvalsh(M)[::-1]


def exceeds(value: float, threshold: float) -> bool:
    """``value > threshold`` outside the comparison guard band."""
    return value > threshold + GUARD


# ----------------------------------------------------------------- walk counts
def _matrix_power_int(A: sp.csr_matrix, p: int):
    """``A**p`` with exact integer entries: int64 when safe, else Python ints."""
    n = A.shape[0]
    dmax = int(np.diff(A.indptr).max()) if n else 0
    if dmax <= 1 or p * math.log2(max(dmax, 2)) < 52:
        # Entries and every partial sum stay below 2**53, so float products are exact.
        B = A.toarray()
        R = np.identity(n)
        e = p
        while e:
            if e & 1:
                R = R @ B
            e >>= 1
            if e:
                B = B @ B
        return R.astype(np.int64)
    if p * math.log2(dmax) < 62:
        B = sp.csr_matrix(A, dtype=np.int64)
        R = sp.identity(n, dtype=np.int64, format="csr")
        base = B
        e = p
        while e:
            if e & 1:
                R = R @ base
            e >>= 1
            if e:
                base = base @ base
        return R.toarray()
    B = A.toarray().astype(np.int64).astype(object)
    R = np.identity(n, dtype=np.int64).astype(object)
    for _ in range(p):
        R = R.dot(B)
    return R


def per_vertex_walk_counts(g: Graph, length: int) -> list[int]:
    """Number of closed walks of the given even length at each vertex."""
    if length < 2 or length % 2:
        raise ValueError("walk length must be an even integer >= 2")
    if g.n == 0:
        return []
    half = _matrix_power_int(g.adjacency_matrix, length // 2)
    # A^len is (A^(len/2))^2, and the half power is symmetric.
    half = half.astype(object)
    return [int(x) for x in (half * half).sum(axis=1)]


def closed_walk_count(g: Graph, length: int) -> int:
    """Trace of the ``length``-th adjacency power, exactly."""
    return sum(per_vertex_walk_counts(g, length))


def walk_count_bracket(T: int, q: int, length: int) -> tuple[float, float]:
    """``((T/q)**(1/len), T**(1/len))``, computed without float overflow."""
    logT = math.log(T) if T > 0 else -math.inf
    lo = math.exp((logT - math.log(q)) / length)
    hi = math.exp(logT / length)
    return lo, hi


# ------------------------------------------------------------- vector measures
def rayleigh(g, v: Sequence[float]) -> float:
    v = np.asarray(v, dtype=float)
    top = float(np.max(np.abs(v))) if v.size else 0.0
    if top == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    v = v / top
    nn = float(v @ v)
    return float(v @ (_as_operator(g) @ v)) / nn


def localization_mass(v: Sequence[float], S: Iterable[int]) -> float:
    v = np.asarray(v, dtype=float)
    top = float(np.max(np.abs(v))) if v.size else 0.0
    if top == 0:
        raise ValueError("localization mass of the zero vector")
    v = v / top  # keeps tiny vectors from underflowing when squared
    nn = float(v @ v)
    idx = np.fromiter(set(S), dtype=np.int64)
    return float(v[idx] @ v[idx]) / nn if idx.size else 0.0


@dataclass(frozen=True)
class LevelDecomposition:
    levels: list[list[int]]
    level_masses: list[float]


def level_decomposition(g: Graph, U: Iterable[int], depth: int, v: Sequence[float]) -> LevelDecomposition:
    """BFS layers ``X_0 = U, X_1, ...`` up to ``depth`` and their squared masses."""
    U = sorted(set(U))
    if not U:
        raise ValueError("level decomposition needs a nonempty root set")
    v = np.asarray(v, dtype=float)
    dist = distances_from(g, U, limit=depth)
    levels: list[list[int]] = [[] for _ in range(depth + 1)]
    for x, k in dist.items():
        levels[k].append(x)
    while len(levels) > 1 and not levels[-1]:
        levels.pop()
    levels = [sorted(L) for L in levels]
    masses = [float(np.sum(v[L] ** 2)) if L else 0.0 for L in levels]
    return LevelDecomposition(levels, masses)


@dataclass(frozen=True)
class InequalityInstance:
    kind: str  # "convex" for 2S_i <= S_{i+1}+S_{i-1}, "pair" for the four-term form
    index: int
    slack: float
    holds: bool


@dataclass(frozen=True)
class LayerReport:
    instances: list[InequalityInstance]
    passed: bool
    min_slack: float


def check_layer_inequalities(dec: LevelDecomposition, d: int | None = None, tol: float = 1e-9) -> LayerReport:
    """Check mass convexity across tree layers.

    With deepest level ``m``: ``2S_i <= S_{i+1} + S_{i-1}`` for ``1 <= i <= m``
    and ``S_i + S_{i+1} <= S_{i-1} + S_{i+2}`` for ``1 <= i <= m-1``, masses
    beyond ``m`` taken as zero. ``d`` is accepted for reporting symmetry with
    the other checks; the inequalities themselves do not depend on it.
    """
    S = list(dec.level_masses) + [0.0, 0.0]
    m = len(dec.level_masses) - 1
    out = []
    for i in range(1, m + 1):
        slack = S[i + 1] + S[i - 1] - 2 * S[i]
        out.append(InequalityInstance("convex", i, slack, slack >= -tol))
    for i in range(1, m):
        slack = S[i - 1] + S[i + 2] - S[i] - S[i + 1]
        out.append(InequalityInstance("pair", i, slack, slack >= -tol))
    min_slack = min((x.slack for x in out), default=math.inf)
    return LayerReport(out, all(x.holds for x in out), min_slack)


@dataclass(frozen=True)
class LinfReport:
    applicable: bool
    max_entry: float
    bound: float
    margin: float
    passed: bool
    reason: str = ""


def linf_bound_check(g: Graph, eigenvalue: float, vector: Sequence[float], r: int,
                     d: int | None = None, graph_girth: float | None = None) -> LinfReport:
    """Compare the sup-norm of a unit eigenvector with ``1/sqrt(r)``.

    Applicable when the girth is at least ``2r-1`` and ``|eigenvalue|`` is at
    least ``2*sqrt(d-1)``; otherwise ``applicable`` is False and so is ``passed``.
    """
    x = np.asarray(vector, dtype=float)
    x = x / np.linalg.norm(x)
    top = float(np.max(np.abs(x)))
    bound = 1.0 / math.sqrt(r)
    d = g.max_degree if d is None else d
    gg = girth(g) if graph_girth is None else graph_girth
    if gg < 2 * r - 1:
        return LinfReport(False, top, bound, bound - top, False, f"girth {gg} < {2 * r - 1}")
    if abs(eigenvalue) < 2 * math.sqrt(d - 1) - GUARD:
        return LinfReport(False, top, bound, bound - top, False, "eigenvalue inside the bulk")
    return LinfReport(True, top, bound, bound - top, top <= bound + GUARD)

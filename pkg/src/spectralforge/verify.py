"""Property suites and the acceptance criteria, each producing a :class:`Report`.

Suites take a number of seeds and check one inequality per seed; they are
what ``forge verify --suite NAME`` runs. The numbered criteria are fixed
experiments with fixed seeds; their reports are deterministic, so rerunning
one yields the same bytes.
"""

from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .augment import (AugmentationSpec, augment, augment_s, bulk_edge, lambda2_ceiling_after_augment,
                      level_quotient, radial_extension, secular_solve, transfer_eigenvalues)
from .construct.deletion import deletion_interpolate
from .construct.gadgets import gadget_search_simple
from .construct.interpolate import interpolate_lambda2, interpolate_lambda_min, swap_drift_bound
from .construct.join import chain_join, join_drift_report
from .construct.localized import localized_graph
from .construct.patching import patch, plan_patch
from .graph_core import (GenerationPolicy, Graph, complete_graph, cycle_graph, delete_vertex,
                         girth, petersen_graph, random_regular)
from .io import derive_seed
from .report import Report, check
from .spectral import (SolverConfig, closed_walk_count, eigenvalues, level_decomposition,
                       linf_bound_check, spectrum, walk_count_bracket, check_layer_inequalities)

EDGE3 = bulk_edge(3)


# ------------------------------------------------------------------ helpers
def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi ``G(n, p)``."""
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, zip(iu[0][keep].tolist(), iu[1][keep].tolist()))


def random_bounded_graph(n: int, dmax: int, rng: np.random.Generator, tries: int | None = None) -> Graph:
    """Add random vertex pairs while both endpoints stay within degree ``dmax``."""
    deg = np.zeros(n, dtype=int)
    edges = set()
    for _ in range(tries if tries is not None else 4 * n * dmax):
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a == b or deg[a] >= dmax or deg[b] >= dmax:
            continue
        e = (min(a, b), max(a, b))
        if e in edges:
            continue
        edges.add(e)
        deg[a] += 1
        deg[b] += 1
    return Graph.from_edges(n, sorted(edges))


def drift_rows(trace, d: int, mode: str) -> list[dict]:
    """Per-step drift against ``8/r`` wherever either endpoint lies outside the bulk."""
    edge = bulk_edge(d)
    rows = []
    for a, b in zip(trace.steps, trace.steps[1:]):
        outside = (max(a.eigenvalue, b.eigenvalue) > edge if mode == "lambda2"
                   else min(a.eigenvalue, b.eigenvalue) < -edge)
        bound = swap_drift_bound(a.girth, b.girth)
        drift = abs(b.eigenvalue - a.eigenvalue)
        rows.append({"step": b.step, "drift": drift, "bound": bound, "applicable": outside,
                     "holds": (drift <= bound + 1e-9) if outside else True})
    return rows


def _timed(fn: Callable[..., Report]) -> Callable[..., Report]:
    def run(*args, **kwargs) -> Report:
        t = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.wall_time = time.perf_counter() - t
        return rep

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ------------------------------------------------------------------- suites
@_timed
def suite_swap_drift(seeds: int = 10, seed: int = 0, n: int = 200, d: int = 3) -> Report:
    rep = Report({"suite": "swap-drift", "seeds": seeds, "seed": seed, "n": n, "d": d})
    for i in range(seeds):
        run = interpolate_lambda2(n, d, None, seed=derive_seed(seed, f"swap-drift/{i}"))
        rows = drift_rows(run.trace, d, "lambda2")
        worst = max((r["drift"] / r["bound"] for r in rows if r["applicable"] and r["bound"] > 0),
                    default=0.0)
        rep.add(check(f"seed{i}.drift_over_bound", worst, 1.0, "<=", 1e-9))
    return rep


@_timed
def suite_linf(seeds: int = 10, seed: int = 0, n: int = 60, d: int = 3) -> Report:
    """Sup-norm of top eigenvectors of near-regular graphs against ``1/sqrt(r)``."""
    rep = Report({"suite": "linf", "seeds": seeds, "seed": seed, "n": n, "d": d})
    for i in range(seeds):
        s = derive_seed(seed, f"linf/{i}")
        g = random_regular(n, d, GenerationPolicy(seed=s, min_girth=5))
        g, _ = delete_vertex(g, 0)
        sp_ = spectrum(g, 1, 0)
        gg = girth(g)
        r = max(1, (int(gg) + 1) // 2)
        out = linf_bound_check(g, sp_.eigenvalues[0], sp_.vectors[:, 0], r, d, gg)
        rep.add(check(f"seed{i}.max_entry", out.max_entry, out.bound, "<=", 1e-9))
    return rep


@_timed
def suite_walk_count(seeds: int = 10, seed: int = 0, nmax: int = 60) -> Report:
    rep = Report({"suite": "walk-count", "seeds": seeds, "seed": seed, "nmax": nmax})
    for i in range(seeds):
        rng = np.random.default_rng(derive_seed(seed, f"walk/{i}"))
        n = int(rng.integers(2, nmax + 1))
        g = random_graph(n, float(rng.uniform(0.05, 0.5)), rng)
        w = eigenvalues(g)
        for ell in (2, 4, 6):
            T = closed_walk_count(g, ell)
            power_sum = float(np.sum(w ** ell))
            rel = abs(power_sum - T) / max(1.0, T)
            rep.add(check(f"seed{i}.l{ell}.trace_rel_error", rel, 1e-6, "<="))
            if T > 0:
                lo, hi = walk_count_bracket(T, n, ell)
                rep.add(check(f"seed{i}.l{ell}.lower", float(w[0]), lo, ">=", 1e-9))
                rep.add(check(f"seed{i}.l{ell}.upper", float(w[0]), hi, "<=", 1e-9))
    return rep


def _secular_instance(i: int, seed: int):
    combos = [(d, s, ell) for d in (3, 4) for s in (1, 2) for ell in (2, 3, 4)]
    d, s, ell = combos[i % len(combos)]
    rng = np.random.default_rng(derive_seed(seed, f"secular/{i}"))
    n = int(rng.integers(2, 11))
    core = random_bounded_graph(n, d, rng)
    return core, d, s, ell


def _secular_checks(rep: Report, tag: str, core: Graph, d: int, s: int, ell: int,
                    layers: Report | None = None) -> None:
    aug = augment_s(core, AugmentationSpec(d, s, ell), allow_excess=True)
    A = aug.graph.dense()
    w, V = np.linalg.eigh(A)
    edge = bulk_edge(d)
    above = np.flatnonzero(w > edge + 1e-9)[::-1]
    built = np.sort(w[above])[::-1]
    mu, U = np.linalg.eigh(core.dense())
    roots = []
    for j in range(core.n):
        lam = secular_solve(float(mu[j]), d, s, ell)
        if lam is not None:
            roots.append((lam, j))
    roots.sort(reverse=True)
    pred = np.array([r[0] for r in roots])
    rep.add(check(f"{tag}.count", len(pred), len(built), "=="))
    if len(pred) == len(built) and len(built):
        rep.add(check(f"{tag}.max_abs_error", float(np.max(np.abs(pred - built))), 1e-8, "<="))
    res = 0.0
    for lam, j in roots:
        x = radial_extension(U[:, j], lam, aug)
        res = max(res, float(np.linalg.norm(A @ x - lam * x) / np.linalg.norm(x)))
    rep.add(check(f"{tag}.radial_residual", res, 1e-8, "<="))
    spread = 0.0
    for idx in above:
        vec = V[:, idx]
        for v in range(core.n):
            for t in range(1, ell + 1):
                sel = vec[(aug.anchor == v) & (aug.depth == t)]
                if sel.size:
                    spread = max(spread, float(sel.max() - sel.min()))
    rep.add(check(f"{tag}.level_spread", spread, 1e-7, "<="))
    if layers is not None and len(above):
        vec = V[:, above[0]]
        dec = level_decomposition(aug.graph, range(core.n), ell, vec)
        lr = check_layer_inequalities(dec, d, 1e-9)
        layers.add(check(f"{tag}.min_slack", lr.min_slack, -1e-9, ">="))


@_timed
def suite_secular(seeds: int = 10, seed: int = 0) -> Report:
    rep = Report({"suite": "secular", "seeds": seeds, "seed": seed})
    for i in range(seeds):
        core, d, s, ell = _secular_instance(i, seed)
        _secular_checks(rep, f"seed{i}", core, d, s, ell)
    return rep


@_timed
def suite_layer(seeds: int = 10, seed: int = 0) -> Report:
    rep = Report({"suite": "layer", "seeds": seeds, "seed": seed})
    scratch = Report({})
    for i in range(seeds):
        core, d, s, ell = _secular_instance(i, seed)
        _secular_checks(scratch, f"seed{i}", core, d, s, ell, layers=rep)
    return rep


@_timed
def suite_join_drift(seeds: int = 5, seed: int = 0, parts: int = 3, n: int = 30, d: int = 3) -> Report:
    """Chains of near-regular high-girth parts; every applicable index obeys ``2s/(r+1)``."""
    rep = Report({"suite": "join-drift", "seeds": seeds, "seed": seed, "parts": parts, "n": n})
    for i in range(seeds):
        gs = []
        for j in range(parts):
            g = random_regular(n, d, GenerationPolicy(seed=derive_seed(seed, f"join/{i}/{j}"),
                                                      min_girth=5))
            g, _ = g.induced_subgraph(range(2, n))
            gs.append(g)
        rows = join_drift_report(gs, parts)
        worst = max((r["diff"] - r["bound"] for r in rows if r["applicable"]), default=-math.inf)
        rep.add(check(f"seed{i}.excess_over_bound", worst, 0.0, "<=", 1e-9))
        rep.add(check(f"seed{i}.connected", chain_join(gs, d).graph.is_connected(), True, "=="))
    return rep


def _lambda2_ceiling_instances(count: int, seed: int):
    out = []
    i = 0
    while len(out) < count:
        rng = np.random.default_rng(derive_seed(seed, f"ceiling/{i}"))
        i += 1
        d = int(rng.choice([3, 4]))
        s = 1
        eps = float(rng.choice([0.25, 0.5, 1.0]))
        ell = int(rng.integers(1, 4))
        core = random_bounded_graph(int(rng.integers(4, 13)), d - s, rng)
        w = eigenvalues(core)
        lam2 = float(w[1]) if core.n > 1 else -math.inf
        threshold, ok = lambda2_ceiling_after_augment(lam2, d, s, eps)
        if ok:
            out.append((core, d, s, eps, ell, lam2, threshold))
    return out


@_timed
def suite_lambda2_ceiling(seeds: int = 20, seed: int = 0) -> Report:
    rep = Report({"suite": "lambda2-ceiling", "seeds": seeds, "seed": seed})
    for i, (core, d, s, eps, ell, lam2, thr) in enumerate(_lambda2_ceiling_instances(seeds, seed)):
        aug = augment_s(core, AugmentationSpec(d, s, ell))
        w = eigenvalues(aug.graph)
        rep.add(check(f"inst{i}.lambda2", float(w[1]), 2 * math.sqrt(d - 1 + eps), "<"))
    return rep


@_timed
def suite_patching(seeds: int = 3, seed: int = 0, host_n: int = 1000, radius: int = 2) -> Report:
    rep = Report({"suite": "patching", "seeds": seeds, "seed": seed, "host_n": host_n,
                  "radius": radius})
    for i in range(seeds):
        host = random_regular(host_n, 3, GenerationPolicy(seed=derive_seed(seed, f"patch-host/{i}"),
                                                          min_girth=6, lambda2_ceiling=EDGE3 + 0.1))
        gad = random_regular(40, 3, GenerationPolicy(seed=derive_seed(seed, f"patch-gadget/{i}"),
                                                     min_girth=5))
        gad, _ = delete_vertex(gad, 0)
        res = patch(plan_patch(host, [gad], radius, 3), certify=True)
        c = res.certificates
        rep.add(check(f"seed{i}.pinning", c["rows"][1]["pin_error"], c["pinning_bound"], "<=", 1e-9))
        rep.add(check(f"seed{i}.lower", c["lower_ok"], True, "=="))
        rep.add(check(f"seed{i}.upper", c["upper_ok"], True, "=="))
        rep.add(check(f"seed{i}.regular", c["regular"], True, "=="))
    return rep


@_timed
def suite_saturation(seeds: int = 3, seed: int = 0, d: int = 4, eps: float = 0.25) -> Report:
    rep = Report({"suite": "saturation", "seeds": seeds, "seed": seed, "d": d, "eps": eps})
    for i in range(seeds):
        target = d - 0.1 - 0.1 * i
        gad = gadget_search_simple(d, target, eps, seed=derive_seed(seed, f"sat/{i}"), fallback=False)
        J = math.ceil(4 * math.sqrt(d - 1) / eps)
        l1 = transfer_eigenvalues(gad.core, gad.trees, d, J, k=1)[0]
        l2 = transfer_eigenvalues(gad.core, gad.trees, d, 2 * J, k=1)[0]
        rep.add(check(f"seed{i}.growth", l2 - l1, eps, "<="))
    return rep


SUITES = {
    "swap-drift": suite_swap_drift,
    "linf": suite_linf,
    "walk-count": suite_walk_count,
    "layer": suite_layer,
    "join-drift": suite_join_drift,
    "secular": suite_secular,
    "patching": suite_patching,
    "saturation": suite_saturation,
    "lambda2-ceiling": suite_lambda2_ceiling,
}


# --------------------------------------------------------- acceptance criteria
@_timed
def criterion_1(seed: int = 0) -> Report:
    """Lanczos against dense diagonalization on 100 small graphs."""
    rep = Report({"criterion": 1, "seed": seed})
    worst = 0.0
    lanczos = SolverConfig(method="lanczos", tol=1e-9)
    for i in range(100):
        rng = np.random.default_rng(derive_seed(seed, f"c1/{i}"))
        n = int(rng.integers(1, 13))
        g = random_graph(n, float(rng.uniform(0.1, 0.9)), rng)
        dense = np.sort(np.linalg.eigvalsh(g.dense()))[::-1]
        lz = spectrum(g, n, 0, lanczos, vectors=False).eigenvalues
        worst = max(worst, float(np.max(np.abs(dense - lz))))
    rep.add(check("max_abs_error", worst, 1e-8, "<="))
    return rep


@_timed
def criterion_2(seed: int = 0) -> Report:
    rep = Report({"criterion": 2})
    cases = {
        "K4": (complete_graph(4), [3, -1, -1, -1]),
        "C4": (cycle_graph(4), [2, 0, 0, -2]),
        "Petersen": (petersen_graph(), [3] + [1] * 5 + [-2] * 4),
    }
    for name, (g, expected) in cases.items():
        for method in ("dense", "lanczos"):
            w = spectrum(g, g.n, 0, SolverConfig(method=method), vectors=False).eigenvalues
            err = float(np.max(np.abs(w - np.array(expected, dtype=float))))
            rep.add(check(f"{name}.{method}", err, 1e-9, "<="))
    return rep


@_timed
def criterion_3(seed: int = 0) -> Report:
    rep = suite_walk_count(50, seed)
    rep.config = {"criterion": 3, "seed": seed}
    return rep


def _swap_report(mode: str, seed: int) -> Report:
    d, n = 3, 1000
    edge = bulk_edge(d)
    fn = interpolate_lambda2 if mode == "lambda2" else interpolate_lambda_min
    target = 2.95 if mode == "lambda2" else -2.95
    policy = GenerationPolicy(seed=seed, min_girth=6, lambda2_ceiling=edge + 0.1)
    rep = Report({"criterion": 4 if mode == "lambda2" else 5, "seed": seed, "n": n, "d": d,
                  "target": target, "girth_floor": 6})
    run = fn(n, d, target, policy=policy, seed=seed)
    rows = drift_rows(run.trace, d, mode)
    applicable = [r for r in rows if r["applicable"]]
    worst = max((r["drift"] - r["bound"] for r in applicable), default=-math.inf)
    max_drift = max((r["drift"] for r in rows), default=0.0)
    rep.add(check("drift_excess_over_8_over_r", worst, 0.0, "<=", 1e-9))
    rep.add(check("achieved_error", abs(run.trace.achieved - target), max_drift, "<="))
    rep.add(check("min_girth", min(s.girth for s in run.trace.steps), 6, ">="))
    if mode == "lambda_min":
        rep.add(check("odd_girth_every_step",
                      all("odd_girth" in s.extra for s in run.trace.steps), True, "=="))
    full = fn(n, d, None, policy=policy, seed=seed)
    cert = full.certificates
    rel = ">=" if mode == "lambda2" else "<="
    rep.add(check("terminal_rayleigh", cert["rayleigh"], cert["bound"], rel))
    rep.add(check("terminal_eigenvalue", cert["eigenvalue"], cert["bound"], rel))
    rep.details = {
        "steps": len(run.trace.steps) - 1,
        "achieved": run.trace.achieved,
        "best_step": run.trace.best_step,
        "max_drift": max_drift,
        "applicable_steps": len(applicable),
        "terminal_steps": len(full.trace.steps) - 1,
        "terminal_counter": full.trace.steps[-1].counter,
        "trace_csv": run.trace.to_csv(),
    }
    if mode == "lambda_min":
        rep.details["odd_girths"] = [s.extra["odd_girth"] for s in run.trace.steps]
    return rep


@_timed
def criterion_4(seed: int = 0) -> Report:
    return _swap_report("lambda2", seed)


@_timed
def criterion_5(seed: int = 0) -> Report:
    return _swap_report("lambda_min", seed)


@_timed
def criterion_6(seed: int = 0) -> Report:
    rep = Report({"criterion": 6, "seed": seed, "n": 256, "d": 3, "target": 2.9})
    run = deletion_interpolate(256, 3, 2.9, seed=seed)
    c = run.certificates
    rep.add(check("error_within_step_bound", c["error"], c["crossing_step_drop_bound"], "<=", 1e-12))
    rep.add(check("max_lambda2", c["max_lambda2"], EDGE3 + 1e-6, "<="))
    rep.add(check("monotone_lambda1", c["monotone_lambda1"], True, "=="))
    rep.details = {"achieved": run.trace.achieved, "steps": len(run.trace.steps) - 1,
                   "trace_csv": run.trace.to_csv()}
    return rep


@_timed
def criterion_7(seed: int = 0) -> Report:
    rep = Report({"criterion": 7, "seed": seed, "instances": 30})
    for i in range(30):
        core, d, s, ell = _secular_instance(i, seed)
        _secular_checks(rep, f"inst{i}.d{d}s{s}l{ell}", core, d, s, ell)
    return rep


@_timed
def criterion_8(seed: int = 0) -> Report:
    rep = suite_lambda2_ceiling(20, seed)
    rep.config = {"criterion": 8, "seed": seed, "instances": 20}
    return rep


@_timed
def criterion_9(seed: int = 0) -> Report:
    d, R, host_n = 3, 4, 3000
    rep = Report({"criterion": 9, "seed": seed, "d": d, "radius": R, "host_n": host_n})
    host = random_regular(host_n, d, GenerationPolicy(seed=derive_seed(seed, "c9/host"), min_girth=6,
                                                      lambda2_ceiling=EDGE3 + 0.1))
    gad = random_regular(40, d, GenerationPolicy(seed=derive_seed(seed, "c9/gadget"), min_girth=5))
    gad, _ = delete_vertex(gad, 0)
    mu1 = float(eigenvalues(gad)[0])
    res = patch(plan_patch(host, [gad], R, d), certify=True, cfg=SolverConfig(method="lanczos"))
    c = res.certificates
    bound = max(math.sqrt(d - 1) / R, 2 * d ** 3 * gad.n / host_n)
    rep.add(check("gadget_mu1", mu1, [EDGE3, d], "in"))
    rep.add(check("host_lambda2", c["host_lambda2"], EDGE3 + 0.1, "<="))
    rep.add(check("pinning", abs(c["rows"][1]["lambda"] - mu1), bound, "<=", 1e-9))
    rep.add(check("patch_lower_bound", c["lower_ok"], True, "=="))
    rep.add(check("regular", c["regular"], True, "=="))
    rep.details = {"lambda2": c["rows"][1]["lambda"], "mu1": mu1, "gadget_vertices": gad.n,
                   "host_girth": c["host_girth"], "upper_ok": c["upper_ok"]}
    return rep


@_timed
def criterion_10(seed: int = 0) -> Report:
    """Saturation at ``J`` versus ``2J`` levels, for ``d=3`` and ``d=4``."""
    eps = 0.25
    rep = Report({"criterion": 10, "seed": seed, "eps": eps})
    for d, target in ((3, 2.97), (4, 3.9)):
        J = math.ceil(4 * math.sqrt(d - 1) / eps)
        gad = gadget_search_simple(d, target, eps, seed=derive_seed(seed, f"c10/{d}"), fallback=False)
        l1 = transfer_eigenvalues(gad.core, gad.trees, d, J, k=1)[0]
        l2 = transfer_eigenvalues(gad.core, gad.trees, d, 2 * J, k=1)[0]
        q1 = float(np.max(np.linalg.eigvalsh(level_quotient(gad.core, gad.trees, d, J).toarray())))
        hyp = l1 >= bulk_edge(d) + eps
        rep.add(check(f"d{d}.growth", l2 - l1, eps, "<="))
        rep.add(check(f"d{d}.non_decreasing", l2 - l1, 0.0, ">=", 1e-9))
        rep.add(check(f"d{d}.quotient_agrees", abs(q1 - l1), 1e-8, "<="))
        rep.details[f"d{d}"] = {"J": J, "lambda1_J": l1, "lambda1_2J": l2,
                                "hypothesis_met": hyp, "core_vertices": gad.core.n}
    rep.add(check("d4.hypothesis", rep.details["d4"]["lambda1_J"], bulk_edge(4) + eps, ">="))
    return rep


@_timed
def criterion_11(seed: int = 0) -> Report:
    beta = 0.3
    rep = Report({"criterion": 11, "seed": seed, "d": 3, "beta": beta, "n0": 200, "host_cap": 10000})
    res = localized_graph(3, beta, 4.0, seed=seed, n0=200, host_cap=10000)
    c = res.certificates
    rep.add(check("eigenvalue_above_edge", res.eigenvalue, EDGE3, ">"))
    rep.add(check("mass", res.mass, 0.7, ">="))
    rep.add(check("split_error", c["split_error"], 1e-6, "<="))
    rep.add(check("exact_partition", c["split"]["exact_partition"], True, "=="))
    rep.add(check("host_vertices", c["host_vertices"], 10000, "<="))
    rep.details = {k: c[k] for k in ("eigenvalue", "mass", "host_lambda2", "patch_vertices",
                                     "in_window", "window", "star_term_ok", "girth", "levels")}
    return rep


@_timed
def criterion_12(seed: int = 0) -> Report:
    rep = Report({"criterion": 12, "seed": seed, "instances": 30})
    scratch = Report({})
    for i in range(30):
        core, d, s, ell = _secular_instance(i, seed)
        _secular_checks(scratch, f"inst{i}", core, d, s, ell, layers=rep)
    rep.add(check("instances_checked", len(rep.certificates), 1, ">="))
    return rep


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}

import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralforge.augment import augment
from spectralforge.construct.deletion import bfs_tree_leaves, deletion_interpolate, walk_length
from spectralforge.construct.gadgets import (
    GadgetSearchError, bipartite_gadget, gadget_search_lift, gadget_search_simple,
)
from spectralforge.construct.interpolate import (
    interpolate_lambda2, interpolate_lambda_min, partner_distance, swap_drift_bound,
)
from spectralforge.construct.join import chain_join, join_drift_report, merged_top
from spectralforge.construct.localized import rayleigh_split
from spectralforge.construct.patching import (
    PatchError, PatchPlan, patch, plan_patch, select_patch_vertices,
)
from spectralforge.construct.trace import InterpolationTrace
from spectralforge.graph_core import (
    GenerationPolicy, Graph, GraphError, complete_graph, cycle_graph, delete_vertex, distances_from,
    path_graph, petersen_graph, random_regular,
)
from spectralforge.spectral import eigenvalues

EDGE3 = 2 * math.sqrt(2)


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def crossing(g, in_b):
    return sum(1 for u, v in g.edges if in_b[u] != in_b[v])


# ------------------------------------------------------------ swap interpolation
@pytest.fixture(scope="module")
def l2_run():
    return interpolate_lambda2(200, 3, 2.95, seed=0)


@pytest.fixture(scope="module")
def lmin_run():
    return interpolate_lambda_min(200, 3, -2.95, seed=0)


def test_interpolation_trivial_target():
    g0 = random_regular(100, 3, GenerationPolicy(seed=5, min_girth=5))
    lam2 = eigenvalues(g0)[1]
    run = interpolate_lambda2(100, 3, lam2 - 1e-12, start=g0)
    assert len(run.trace.steps) == 1 and run.graph == g0
    lam_n = eigenvalues(g0)[-1]
    run = interpolate_lambda_min(100, 3, lam_n + 1e-12, start=g0)
    assert len(run.trace.steps) == 1 and run.graph == g0


def test_interpolation_rejects_odd_n():
    with pytest.raises(ValueError):
        interpolate_lambda2(101, 4, 3.5)


def test_lambda2_run_properties(l2_run):
    g, trace = l2_run
    assert trace.stop_reason == "target-crossed"
    assert trace.achieved == trace.steps[trace.best_step].eigenvalue
    assert eigenvalues(g)[1] == pytest.approx(trace.achieved, abs=1e-9)
    counters = [s.counter for s in trace.steps]
    assert all(b - a == -2 for a, b in zip(counters, counters[1:]))
    lam = trace.eigenvalues
    drifts = [abs(b - a) for a, b in zip(lam, lam[1:])]
    for i, dlt in enumerate(drifts):
        if max(lam[i], lam[i + 1]) > EDGE3:
            assert dlt <= swap_drift_bound(trace.steps[i].girth, trace.steps[i + 1].girth)
    assert abs(trace.achieved - 2.95) <= max(drifts)
    assert g.is_regular(3) and all(s.girth >= 6 for s in trace.steps)
    # the recorded crossing count agrees with the run's own bisection
    in_b = run_side(l2_run)
    assert crossing(l2_run.terminal, in_b) == trace.steps[-1].counter


def run_side(run):
    return run.bisection.side(run.start.n) > 0


def test_lambda_min_run_properties(lmin_run):
    g, trace = lmin_run
    counters = [s.counter for s in trace.steps]
    assert all(b - a == -2 for a, b in zip(counters, counters[1:]))  # non-crossing edges
    assert all(x is not None for x in trace.column("odd_girth"))
    lam = trace.eigenvalues
    drifts = [abs(b - a) for a, b in zip(lam, lam[1:])]
    assert abs(trace.achieved + 2.95) <= max(drifts)
    assert g.is_regular(3)


def test_interpolation_deterministic(l2_run):
    again = interpolate_lambda2(200, 3, 2.95, seed=0)
    assert again.trace.to_csv() == l2_run.trace.to_csv()
    assert again.graph == l2_run.graph


def test_exhaustion_certificate_small():
    run = interpolate_lambda2(100, 3, None, seed=2)
    cert = run.certificates
    assert run.trace.stop_reason in ("counter-threshold", "no-partner")
    side = run.bisection.side(100)
    q = float(side @ (run.terminal.adjacency_matrix @ side)) / 100
    assert cert["rayleigh"] == pytest.approx(q)
    if run.trace.stop_reason == "counter-threshold":
        assert cert["rayleigh_meets_bound"]
        assert q >= 3 - 4 / math.sqrt(100)


def test_partner_distance_protects_floor():
    assert partner_distance(1000, 3, 6, 6) == 5
    assert partner_distance(10 ** 6, 3, 9, 3) >= 2


# --------------------------------------------------------------------- traces
def test_trace_csv_header_only():
    assert InterpolationTrace().to_csv() == "step,surgery,eigenvalue,girth,counter\n"


def test_trace_csv_three_steps():
    t = InterpolationTrace(target=1.0)
    for i in range(3):
        t.append(i, f"swap {i}", 2.0 - i / 10, math.inf if i == 0 else 6, 10 - 2 * i, odd_girth=7)
    lines = t.to_csv().splitlines()
    assert len(lines) == 4
    assert lines[0] == "step,surgery,eigenvalue,girth,counter,odd_girth"
    assert lines[1] == "0,swap 0,2.0,inf,10,7"


# -------------------------------------------------------------------- deletion
def test_walk_length():
    assert walk_length(256) == 64
    assert walk_length(20) == 10
    assert walk_length(13) == 6
    assert walk_length(3) == 2


def test_deletion_trivial_target():
    run = deletion_interpolate(50, 3, 3.0, seed=1)
    assert len(run.trace.steps) == 1 and run.graph == run.start


@pytest.mark.parametrize("connected", [False, True])
def test_deletion_run(connected):
    run = deletion_interpolate(100, 3, 2.9, connected=connected, seed=0)
    trace = run.trace
    lam1 = trace.eigenvalues
    assert all(b <= a + 1e-9 for a, b in zip(lam1, lam1[1:]))
    lam2 = trace.column("lambda2")
    assert max(lam2) <= lam2[0] + 1e-9
    assert abs(trace.achieved - 2.9) <= trace.steps[-1].extra["drop_bound"] + 1e-12
    assert run.graph.max_degree <= 3
    assert eigenvalues(run.graph)[0] == pytest.approx(trace.achieved, abs=1e-9)
    # labels map back to an induced subgraph of the start
    sub, _ = run.start.induced_subgraph(run.old_labels)
    assert sub == run.graph
    if connected:
        assert run.graph.is_connected()
        assert int(np.sum(run.graph.degrees < 3)) >= 2


def test_bfs_tree_leaves():
    assert bfs_tree_leaves(path_graph(4), 0) == [3]
    assert bfs_tree_leaves(cycle_graph(6), 0) == [3, 4]  # 3 is reached through 2, so 4 stays a leaf
    assert bfs_tree_leaves(complete_graph(4), 0) == [1, 2, 3]


# ------------------------------------------------------------------------ join
def test_join_single_part_unchanged():
    assert chain_join([petersen_graph()], 4).graph == petersen_graph()


def test_join_two_edges_is_p4():
    res = chain_join([path_graph(2), path_graph(2)], 2)
    assert nx.is_isomorphic(to_nx(res.graph), nx.path_graph(4))
    expected = sorted((2 * math.cos(k * math.pi / 5) for k in range(1, 5)), reverse=True)
    assert np.allclose(eigenvalues(res.graph), expected)
    assert expected[0] == pytest.approx((1 + math.sqrt(5)) / 2)


def test_join_needs_low_degree_vertices():
    with pytest.raises(GraphError):
        chain_join([complete_graph(4), complete_graph(4)], 3)


def test_join_drift_three_gadgets():
    parts = []
    for i in range(3):
        g = random_regular(60, 3, GenerationPolicy(seed=10 + i, min_girth=5))
        for _ in range(2):
            g, _ = delete_vertex(g, g.n - 1)
        parts.append(g)
    res = chain_join(parts, 3)
    assert res.graph.is_connected() and res.graph.max_degree <= 3
    rows = join_drift_report(parts, 3, 3)
    assert rows and all(r["holds"] for r in rows if r["applicable"])
    # the merged list really is the union's top of the spectrum
    union_top = np.sort(np.concatenate([eigenvalues(p) for p in parts]))[::-1][:3]
    assert np.allclose(merged_top(parts, 3), union_top)


# -------------------------------------------------------------------- patching
def test_select_patch_vertices_examples():
    host = random_regular(30, 3, GenerationPolicy(seed=0))
    assert len(select_patch_vertices(host, 1, 5)) == 1
    a, b = select_patch_vertices(cycle_graph(20), 2, 2)
    assert nx.shortest_path_length(to_nx(cycle_graph(20)), a, b) >= 9
    with pytest.raises(PatchError):
        select_patch_vertices(random_regular(50, 3, GenerationPolicy(seed=1)), 5, 10)
    assert select_patch_vertices(cycle_graph(20), 0, 2) == ()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 2), st.integers(1, 6))
def test_selected_vertices_are_far_apart(seed, radius, count):
    host = random_regular(400, 3, GenerationPolicy(seed=seed))
    try:
        M = select_patch_vertices(host, count, radius)
    except PatchError:
        return
    for i, m in enumerate(M):
        near = distances_from(host, [m], limit=4 * radius)
        assert not any(o in near for o in M[i + 1:])


def test_patch_zero_gadgets_is_host():
    host = random_regular(40, 3, GenerationPolicy(seed=2))
    res = patch(plan_patch(host, [], 1, 3))
    assert res.graph == host


def test_patch_one_gadget():
    host = random_regular(600, 3, GenerationPolicy(seed=4, min_girth=6, lambda2_ceiling=EDGE3 + 0.1))
    gad, _ = delete_vertex(random_regular(30, 3, GenerationPolicy(seed=3, min_girth=5)), 0)
    res = patch(plan_patch(host, [gad], 1, 3), certify=True)
    g = res.graph
    assert g.is_regular(3)
    assert g.n == host.n - 1 + gad.n
    sub, _ = g.induced_subgraph(res.gadget_vertices(0))
    assert sub == gad
    c = res.certificates
    assert c["regular"] and c["lower_ok"] and c["upper_ok"] and c["pinning_ok"]


def test_patch_plan_validation():
    host = random_regular(100, 3, GenerationPolicy(seed=0))
    gad, _ = delete_vertex(petersen_graph(), 0)
    with pytest.raises(PatchError):
        PatchPlan(host, [gad], (0, 1), 1, 3).validate()  # wrong |M|
    M = select_patch_vertices(host, 1, 1)
    PatchPlan(host, [gad], M, 1, 3).validate()
    with pytest.raises(PatchError):
        PatchPlan(host, [gad], M, 1, 3).validate(divisor=6)
    with pytest.raises(PatchError):
        plan_patch(host, [path_graph(2)], 1, 3)  # 4 leaves, not a multiple of 3


# --------------------------------------------------------------------- gadgets
def test_gadget_simple_with_fallback():
    res = gadget_search_simple(3, 2.9, 0.2, seed=0)
    assert abs(res.lambda1 - 2.9) <= 0.4
    assert res.certificates["trivial_gadget"]
    assert res.core.n == 6 and res.core.edge_count == 3  # three isolated edges
    assert res.leaf_count % 6 == 0


def test_gadget_simple_searched():
    res = gadget_search_simple(3, 2.9, 0.2, seed=0, fallback=False)
    assert abs(res.lambda1 - 2.9) <= 0.4
    assert res.certificates["core_lambda2_ok"]
    assert res.leaf_count % 6 == 0
    lam = [s.eigenvalue for s in res.trace.steps]
    assert all(b <= a + 0.1 for a, b in zip(lam, lam[1:]))


def test_trivial_gadget_top_eigenvalue():
    # an isolated edge augmented deeply approaches but stays below the bulk edge
    edges = Graph.from_edges(6, [(0, 1), (2, 3), (4, 5)])
    g = augment(edges, 3, 6).graph
    assert eigenvalues(g)[0] < EDGE3


def test_gadget_lift():
    res = gadget_search_lift(3, 2.95, 0.25, seed=0)
    c = res.certificates
    assert abs(res.lambda1 - 2.95) <= 0.25
    assert c["lambda2_ok"] and c["step_drift_ok"] and c["deficiency_divisible_d"]
    assert c["explicit"]["agree"]


def test_bipartite_gadget_unreachable_window_raises():
    with pytest.raises(GadgetSearchError):
        bipartite_gadget(3, 0.2, 0.2, n0=200, seed=0)


def test_bipartite_gadget_d4():
    res = bipartite_gadget(4, 0.2, 0.2, n0=200, seed=0)
    c = res.certificates
    lo, hi = c["window"]
    assert lo < res.lambda1 < hi
    assert c["sampled_agree"] and c["girth_ok"] and c["min_vertices_ok"]
    assert res.leaf_count % 4 == 0


def test_bipartite_start_spectrum_symmetric():
    g = random_regular(60, 3, GenerationPolicy(seed=0), bipartite=True)
    w = eigenvalues(g)
    assert w[-1] == pytest.approx(-3)
    assert np.allclose(w, -w[::-1], atol=1e-9)


# ------------------------------------------------------------------- localized
def test_rayleigh_split_partitions_edges():
    rng = np.random.default_rng(0)
    host = random_regular(200, 3, GenerationPolicy(seed=0, min_girth=5))
    gad, _ = delete_vertex(petersen_graph(), 0)
    aug = augment(gad, 3, 2)
    res = patch(plan_patch(host, [aug.graph], 1, 3))
    g = res.graph
    in_g = np.zeros(g.n, bool)
    in_g[list(res.gadget_vertices(0))] = True
    leaves = res.gadget_offsets[0] + np.flatnonzero(aug.graph.degrees == 1)
    stars = np.zeros(g.n, bool)
    stars[leaves] = True
    for x in leaves:
        stars[[y for y in g.adjacency[x] if not in_g[y]]] = True
    v = rng.normal(size=g.n)
    split = rayleigh_split(g, v, in_g, stars)
    assert split["exact_partition"]
    assert split["sum"] == pytest.approx(split["full"], abs=1e-9)
    # the star part is a disjoint union of stars with at most d-1 leaves each
    assert split["terms"]["stars"] <= math.sqrt(2) * split["stars_mass"] + 1e-9

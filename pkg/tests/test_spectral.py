import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectralforge.augment import AugmentationSpec, augment, augment_s
from spectralforge.graph_core import (
    GenerationPolicy, Graph, complete_graph, cycle_graph, path_graph, petersen_graph,
    random_regular, star_graph,
)
from spectralforge.spectral import (
    ConvergenceError, SolverConfig, check_layer_inequalities, closed_walk_count, eigenvalues,
    level_decomposition, linf_bound_check, localization_mass, per_vertex_walk_counts, rayleigh,
    spectrum, walk_count_bracket, LevelDecomposition,
)


def int_matrix(g):
    M = [[0] * g.n for _ in range(g.n)]
    for u, v in g.edges:
        M[u][v] = M[v][u] = 1
    return M


def int_power_diag(g, p):
    """Diagonal of A**p by plain Python integer products (no numpy)."""
    A = int_matrix(g)
    R = [[int(i == j) for j in range(g.n)] for i in range(g.n)]
    for _ in range(p):
        R = [[sum(R[i][k] * A[k][j] for k in range(g.n)) for j in range(g.n)] for i in range(g.n)]
    return [R[i][i] for i in range(g.n)]


def charpoly(g):
    """Exact characteristic polynomial coefficients (leading first), Faddeev-LeVerrier."""
    n = g.n
    A = [[Fraction(x) for x in row] for row in int_matrix(g)]
    M = [[Fraction(0)] * n for _ in range(n)]
    coeffs = [Fraction(1)]
    for k in range(1, n + 1):
        # M <- A M + c_{k-1} I ; c_k = -tr(A M)/k
        AM = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        M = [[AM[i][j] + (coeffs[-1] if i == j else 0) for j in range(n)] for i in range(n)]
        AM = [[sum(A[i][t] * M[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(-sum(AM[i][i] for i in range(n)) / k)
    return [int(c) for c in coeffs]


def expand(roots):
    poly = [1]
    for r in roots:
        poly = [a - r * b for a, b in zip(poly + [0], [0] + poly)]
    return poly


@st.composite
def small_graphs(draw, max_n=12, min_n=1):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [p for p, k in zip(pairs, keep) if k])


# -------------------------------------------------------------------- spectrum
def test_spectrum_k4_and_c4():
    assert np.allclose(eigenvalues(complete_graph(4)), [3, -1, -1, -1])
    assert np.allclose(eigenvalues(cycle_graph(4)), [2, 0, 0, -2], atol=1e-12)


def test_petersen_spectrum_matches_characteristic_polynomial():
    g = petersen_graph()
    assert charpoly(g) == expand([3] + [1] * 5 + [-2] * 4)
    assert np.allclose(eigenvalues(g), [3] + [1] * 5 + [-2] * 4)


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_spectrum_top_and_bottom(method):
    s = spectrum(petersen_graph(), 2, 2, SolverConfig(method=method), vectors=True)
    assert np.allclose(s.top, [3, 1])
    assert np.allclose(s.bottom, [-2, -2])
    assert np.all(s.residuals <= 1e-9)
    assert np.allclose(s.vectors.T @ s.vectors, np.eye(4), atol=1e-8)


def test_spectrum_rejects_too_many():
    with pytest.raises(ValueError):
        spectrum(cycle_graph(4), 3, 2)


def test_regular_connected_top_vector_constant_sign():
    g = random_regular(300, 3, GenerationPolicy(seed=4))
    s = spectrum(g, 1, 0, SolverConfig(method="lanczos"), vectors=True)
    assert abs(s.eigenvalues[0] - 3) < 1e-9
    v = s.vectors[:, 0]
    assert np.all(v > 0) or np.all(v < 0)


def test_spectrum_deterministic_and_json():
    g = random_regular(200, 4, GenerationPolicy(seed=9))
    cfg = SolverConfig(method="lanczos", seed=3)
    a, b = spectrum(g, 3, 1, cfg), spectrum(g, 3, 1, cfg)
    assert a.to_json() == b.to_json()
    assert '"method": "lanczos"' in a.to_json()


def test_lanczos_iteration_cap_reports_residuals():
    g = random_regular(400, 3, GenerationPolicy(seed=0))
    with pytest.raises(ConvergenceError) as info:
        spectrum(g, 4, 0, SolverConfig(method="lanczos", max_iterations=3))
    assert info.value.residuals is not None


@settings(max_examples=60, deadline=None)
@given(small_graphs(max_n=12), st.integers(0, 50))
def test_lanczos_agrees_with_full_diagonalisation(g, seed):
    full = np.sort(np.linalg.eigvalsh(g.dense()))[::-1]
    k_top = (g.n + 1) // 2
    k_bottom = g.n - k_top
    s = spectrum(g, k_top, k_bottom, SolverConfig(method="lanczos", seed=seed), vectors=True)
    assert np.allclose(s.eigenvalues, full, atol=1e-8)
    assert np.all(s.residuals <= 1e-9)


# ---------------------------------------------------------------- walk counts
def test_closed_walk_examples():
    assert closed_walk_count(complete_graph(4), 2) == 12
    assert closed_walk_count(cycle_graph(4), 2) == 8
    assert closed_walk_count(petersen_graph(), 4) == 150 == sum(int_power_diag(petersen_graph(), 4))


def test_per_vertex_walk_examples():
    assert per_vertex_walk_counts(complete_graph(4), 2) == [3, 3, 3, 3]
    assert per_vertex_walk_counts(star_graph(3), 2) == [3, 1, 1, 1]
    assert per_vertex_walk_counts(cycle_graph(6), 4) == [6] * 6 == int_power_diag(cycle_graph(6), 4)


@pytest.mark.parametrize("length", [0, 3, -2])
def test_walk_length_must_be_even(length):
    with pytest.raises(ValueError):
        closed_walk_count(cycle_graph(4), length)


def test_walk_counts_exact_for_huge_powers():
    g = complete_graph(6)
    # closed walks in K_n: ((n-1)^L + (n-1)(-1)^L) per vertex ... times n / n
    L = 60
    expected = 5 ** L + 5 * (-1) ** L
    assert closed_walk_count(g, L) == expected


@settings(max_examples=50, deadline=None)
@given(small_graphs(max_n=10), st.sampled_from([2, 4, 6]))
def test_walk_count_equals_power_sum(g, length):
    w = np.linalg.eigvalsh(g.dense())
    T = closed_walk_count(g, length)
    assert math.isclose(T, float(np.sum(w ** length)), rel_tol=1e-6, abs_tol=1e-6)
    assert per_vertex_walk_counts(g, length) == int_power_diag(g, length)


@settings(max_examples=40, deadline=None)
@given(small_graphs(max_n=10, min_n=2), st.sampled_from([2, 4, 8]))
def test_walk_count_bracket_contains_top_eigenvalue(g, length):
    if g.edge_count == 0:
        return
    lam1 = float(np.linalg.eigvalsh(g.dense())[-1])
    lo, hi = walk_count_bracket(closed_walk_count(g, length), g.n, length)
    assert lo - 1e-9 <= lam1 <= hi + 1e-9


# -------------------------------------------------------------- vector measures
def test_rayleigh_examples():
    g = petersen_graph()
    assert rayleigh(g, np.ones(10)) == pytest.approx(3)
    assert rayleigh(cycle_graph(4), [1, -1, 1, -1]) == pytest.approx(-2)
    s = spectrum(g, 2, 0, vectors=True)
    assert rayleigh(g, s.vectors[:, 1]) == pytest.approx(1)
    with pytest.raises(ValueError):
        rayleigh(g, np.zeros(10))


def test_localization_mass_examples():
    v = np.array([1.0, -2.0, 0.0, 3.0])
    assert localization_mass(v, range(4)) == pytest.approx(1)
    assert localization_mass(v, []) == 0
    assert localization_mass(v, [0, 1, 3]) == pytest.approx(1)
    assert localization_mass(v, [1]) == pytest.approx(4 / 14)
    with pytest.raises(ValueError):
        localization_mass(np.zeros(3), [0])


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12), st.data())
def test_localization_mass_in_unit_interval(xs, data):
    v = np.array(xs)
    if not np.any(v):
        return
    S = data.draw(st.sets(st.integers(0, len(xs) - 1)))
    m = localization_mass(v, S)
    assert -1e-12 <= m <= 1 + 1e-12


# ----------------------------------------------------------------- level masses
def test_level_decomposition_examples():
    dec = level_decomposition(path_graph(4), [0], 5, np.arange(4.0))
    assert dec.levels == [[0], [1], [2], [3]]
    assert dec.level_masses == [0, 1, 4, 9]
    assert level_decomposition(cycle_graph(5), range(5), 3, np.ones(5)).levels == [list(range(5))]
    dec = level_decomposition(cycle_graph(6), [0], 3, np.ones(6))
    assert [len(L) for L in dec.levels] == [1, 2, 2, 1]
    with pytest.raises(ValueError):
        level_decomposition(cycle_graph(6), [], 3, np.ones(6))


@settings(max_examples=40, deadline=None)
@given(small_graphs(max_n=10), st.data())
def test_levels_disjoint_and_contiguous(g, data):
    U = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1))
    dec = level_decomposition(g, U, 4, np.ones(g.n))
    flat = [x for L in dec.levels for x in L]
    assert len(flat) == len(set(flat))
    for i in range(1, len(dec.levels)):
        if dec.levels[i]:
            assert dec.levels[i - 1]


def test_layer_inequalities_trivial():
    flat = check_layer_inequalities(LevelDecomposition([[0]] * 4, [1.0] * 4))
    convex = [x for x in flat.instances if x.kind == "convex" and x.index < 3]
    assert all(x.slack == 0 and x.holds for x in convex)
    assert check_layer_inequalities(LevelDecomposition([[0]] * 4, [1, 2, 4, 8])).instances
    concave = check_layer_inequalities(LevelDecomposition([[0]] * 3, [0, 5, 0]))
    assert not concave.passed


def test_layer_inequalities_on_augmented_k4():
    # K4 is already cubic, so its cubic augmentation is K4 itself: one layer, nothing to violate
    aug = augment(complete_graph(4), 3, 3)
    assert aug.graph == complete_graph(4)
    w, V = np.linalg.eigh(aug.graph.dense())
    dec = level_decomposition(aug.graph, range(4), 3, V[:, -1])
    assert len(dec.levels) == 1 and check_layer_inequalities(dec, 3).passed


@pytest.mark.parametrize("core,d,s,levels", [
    (complete_graph(5), 5, None, 3),
    (complete_graph(4), 3, 2, 3),
    (petersen_graph(), 4, 2, 4),
])
def test_layer_inequalities_on_tree_layers(core, d, s, levels):
    if s is None:
        aug = augment(core, d, levels)
    else:
        aug = augment_s(core, AugmentationSpec(d, s, levels), allow_excess=True)
    w, V = np.linalg.eigh(aug.graph.dense())
    assert w[-1] > 2 * math.sqrt(d - 1)
    dec = level_decomposition(aug.graph, range(core.n), levels, V[:, -1])
    assert len(dec.levels) == levels + 1
    rep = check_layer_inequalities(dec, d)
    assert rep.passed, rep.min_slack


# -------------------------------------------------------------- sup-norm bound
def test_linf_trivial_cases():
    rep = linf_bound_check(cycle_graph(6), 2.0, np.ones(6), 3)
    assert rep.applicable and rep.passed
    assert rep.max_entry == pytest.approx(1 / math.sqrt(6))
    assert rep.bound == pytest.approx(1 / math.sqrt(3))
    rng = np.random.default_rng(0)
    g = random_regular(20, 3, GenerationPolicy(seed=0))
    assert linf_bound_check(g, 3.0, rng.normal(size=20), 1).passed


def test_linf_not_applicable():
    rep = linf_bound_check(complete_graph(4), 3.0, np.ones(4), 3)
    assert not rep.applicable and "girth" in rep.reason


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_linf_bound_on_high_girth_cubic(seed):
    g = random_regular(200, 3, GenerationPolicy(seed=seed, min_girth=7))
    s = spectrum(g, 2, 1, vectors=True)
    r = 4  # girth >= 7 = 2r - 1
    for j in (1, 2):
        lam = s.eigenvalues[j]
        if abs(lam) >= 2 * math.sqrt(2):
            assert linf_bound_check(g, lam, s.vectors[:, j], r, d=3).passed

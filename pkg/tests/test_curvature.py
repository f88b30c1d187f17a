import math

import numpy as np
import pytest

from mixcurv.manifolds import Manifold, ProductManifold
from mixcurv.curvature import (
    GreedyConfig,
    PipelineError,
    delta_hyperbolicity,
    greedy_signature_search,
    gromov_matrix,
    gromov_product,
    relative_delta,
    sectional_curvature,
    sectional_curvature_all,
    sectional_curvature_graph,
)
from mixcurv.embed import graph_to_distance_matrix
from mixcurv.optim import RsgdConfig


def brute_force_delta(D, base=0):
    """All triples against the fixed base, straight from the definition."""
    n = D.shape[0]
    G = np.array(
        [[gromov_product(D, i, j, base) for j in range(n)] for i in range(n)]
    )
    best = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                best = max(best, min(G[i, k], G[k, j]) - G[i, j])
    return best


def random_connected_graph(n, rng, extra=0.3):
    edges = [(i, int(rng.integers(0, i))) for i in range(1, n)]
    m = int(extra * n)
    for _ in range(m):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges.append((int(i), int(j)))
    return graph_to_distance_matrix(np.array(edges), n_nodes=n)


def random_tree_metric(n, rng):
    edges = np.array([(i, int(rng.integers(0, i))) for i in range(1, n)])
    return graph_to_distance_matrix(edges, n_nodes=n)


class TestGromovProduct:
    def test_equilateral(self):
        D = np.full((3, 3), 2.0)
        np.fill_diagonal(D, 0.0)
        assert gromov_product(D, 1, 2, 0) == pytest.approx(1.0)

    def test_x_equals_base(self):
        D = random_tree_metric(6, np.random.default_rng(0))
        assert gromov_product(D, 0, 3, 0) == pytest.approx(0.0)

    def test_y_equals_x(self):
        D = random_tree_metric(6, np.random.default_rng(1))
        assert gromov_product(D, 3, 3, 0) == pytest.approx(D[0, 3])

    def test_matrix_structure(self):
        D = random_tree_metric(7, np.random.default_rng(2))
        G = gromov_matrix(D, base=2)
        np.testing.assert_allclose(G, G.T)
        np.testing.assert_allclose(np.diag(G), D[2])
        np.testing.assert_allclose(G[2], 0.0)


class TestDeltaHyperbolicity:
    def test_star_tree_zero(self):
        edges = np.array([(0, i) for i in range(1, 8)])
        D = graph_to_distance_matrix(edges)
        assert delta_hyperbolicity(D) == pytest.approx(0.0)
        assert brute_force_delta(D) == pytest.approx(0.0)

    def test_four_cycle_is_one(self):
        D = graph_to_distance_matrix(np.array([(0, 1), (1, 2), (2, 3), (3, 0)]))
        assert delta_hyperbolicity(D, base=0) == pytest.approx(1.0)

    def test_exact_equals_brute_force(self):
        rng = np.random.default_rng(3)
        for trial in range(12):
            n = int(rng.integers(5, 13))
            D = random_connected_graph(n, rng)
            assert delta_hyperbolicity(D) == pytest.approx(
                brute_force_delta(D), abs=1e-12
            )

    def test_trees_are_zero_exactly(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            n = int(rng.integers(5, 13))
            D = random_tree_metric(n, rng)
            assert delta_hyperbolicity(D) == 0.0

    def test_sampled_lower_bounds_exact(self):
        rng = np.random.default_rng(5)
        for trial in range(50):
            n = int(rng.integers(6, 24))
            D = random_connected_graph(n, rng)
            exact = delta_hyperbolicity(D)
            sampled = delta_hyperbolicity(D, n_samples=80, rng=trial)
            assert 0.0 <= sampled <= exact + 1e-12

    def test_nonnegative(self):
        rng = np.random.default_rng(6)
        for trial in range(20):
            D = random_connected_graph(int(rng.integers(5, 15)), rng)
            assert delta_hyperbolicity(D) >= 0.0

    def test_all_bases_at_least_fixed_base(self):
        rng = np.random.default_rng(7)
        D = random_connected_graph(10, rng)
        assert delta_hyperbolicity(D, all_bases=True) >= delta_hyperbolicity(D)

    def test_small_matrix_rejected(self):
        with pytest.raises(ValueError):
            delta_hyperbolicity(np.zeros((3, 3)))


class TestRelativeDelta:
    def test_zero_delta(self):
        D = graph_to_distance_matrix(np.array([(0, 1), (1, 2), (2, 3)]))
        assert relative_delta(D, 0.0) == 0.0

    def test_direct_substitution(self):
        D = np.array([[0.0, 2.0], [2.0, 0.0]])
        assert relative_delta(D, 1.0) == pytest.approx(1.0)

    def test_tree_metrics_zero(self):
        rng = np.random.default_rng(8)
        for trial in range(5):
            D = random_tree_metric(int(rng.integers(5, 12)), rng)
            assert relative_delta(D, delta_hyperbolicity(D)) == 0.0

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            relative_delta(np.zeros((4, 4)), 0.0)


class TestSectionalCurvatureManifold:
    def test_euclidean_triangle_is_flat(self, rng):
        m = Manifold(0, 3)
        a, b, c = rng.normal(size=(3, 3))
        assert sectional_curvature(m, a, b, c) == pytest.approx(0.0, abs=1e-10)

    def test_sphere_positive(self):
        m = Manifold(1, 2)
        a = np.array([1.0, 0.0, 0.0])
        b = np.array([0.0, 1.0, 0.0])
        c = np.array([0.0, 0.0, 1.0])
        assert sectional_curvature(m, a, b, c) > 0.0

    def test_hyperboloid_negative(self):
        m = Manifold(-1, 2)
        o = m.origin()
        a = m.exp_map(o, np.array([0.0, 0.9, 0.0]))
        b = m.exp_map(o, np.array([0.0, -0.8, 0.4]))
        c = m.exp_map(o, np.array([0.0, 0.1, -1.0]))
        assert sectional_curvature(m, a, b, c) < 0.0

    def test_antipodal_rejected(self):
        m = Manifold(1, 2)
        with pytest.raises(ValueError):
            sectional_curvature(
                m, np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]),
                np.array([-1.0, 0.0, 0.0]),
            )


def graph_fixture(edges, n=None):
    edges = np.array(edges)
    D = graph_to_distance_matrix(edges, n_nodes=n)
    nn = D.shape[0]
    A = np.zeros((nn, nn), dtype=int)
    for i, j in edges:
        A[i, j] = A[j, i] = 1
    return D, A


class TestSectionalCurvatureGraph:
    def test_path_interior_flat(self):
        D, A = graph_fixture([(0, 1), (1, 2)])
        assert sectional_curvature_graph(D, A, 1, 0, 2) == pytest.approx(0.0)

    def test_four_cycle_positive_everywhere(self):
        D, A = graph_fixture([(0, 1), (1, 2), (2, 3), (3, 0)])
        for m in range(4):
            nb = np.flatnonzero(A[m])
            val = sectional_curvature_graph(D, A, m, int(nb[0]), int(nb[1]))
            assert val > 0.0

    def test_binary_tree_negative_at_internal_nodes(self):
        edges = [((i - 1) // 2, i) for i in range(1, 15)]
        D, A = graph_fixture(edges)
        # Perfect branch symmetry makes the root's child pair exactly flat;
        # every internal node's child pair sees the branching as negative.
        assert sectional_curvature_graph(D, A, 0, 1, 2) == pytest.approx(0.0)
        assert sectional_curvature_graph(D, A, 1, 3, 4) < 0.0
        assert sectional_curvature_graph(D, A, 2, 5, 6) < 0.0
        # averaged over every midpoint/neighbor-pair choice the tree is
        # negatively curved overall
        rows = sectional_curvature_all(D, A)
        assert np.mean([v for *_, v in rows]) < 0.0

    def test_matches_brute_force_average(self):
        edges = [((i - 1) // 2, i) for i in range(1, 15)]
        D, A = graph_fixture(edges)
        total = 0.0
        n = D.shape[0]
        for a in range(n):
            if a == 0:
                continue
            dam = D[a, 0]
            total += (
                dam**2 + D[1, 2] ** 2 / 4 - (D[a, 1] ** 2 + D[a, 2] ** 2) / 2
            ) / (2 * dam)
        expected = total / (n - 1)
        assert sectional_curvature_graph(D, A, 0, 1, 2) == pytest.approx(expected)

    def test_non_neighbor_rejected(self):
        D, A = graph_fixture([(0, 1), (1, 2), (2, 3)])
        with pytest.raises(ValueError):
            sectional_curvature_graph(D, A, 0, 1, 3)

    def test_enumeration_covers_neighbor_pairs(self):
        D, A = graph_fixture([(0, 1), (1, 2), (2, 3), (3, 0)])
        rows = sectional_curvature_all(D, A)
        assert len(rows) == 4  # one neighbor pair per node in a 4-cycle
        for _, _, _, v in rows:
            assert v > 0.0


class TestGreedySignatureSearch:
    def test_single_candidate_single_component(self):
        D = graph_to_distance_matrix(np.array([((i - 1) // 2, i) for i in range(1, 12)]))
        cfg = GreedyConfig(
            candidates=[Manifold(0.0, 2)],
            max_components=1,
            embed_cfg=RsgdConfig(train_lr=0.02, total_epochs=60, burn_in_epochs=6),
        )
        pm, losses = greedy_signature_search(D, cfg)
        assert pm.signature == [(0.0, 2)]
        assert len(losses) == 1

    def test_sphere_data_picks_sphere(self):
        base = ProductManifold([(1, 2)])
        rng = np.random.default_rng(0)
        P = rng.normal(size=(100, 3))
        P /= np.linalg.norm(P, axis=1, keepdims=True)
        D = base.pairwise_distance(P)
        hits = 0
        for seed in range(10):
            pm, _ = greedy_signature_search(D, GreedyConfig(seed=seed, max_components=1))
            hits += pm.components[0].curvature > 0
        assert hits >= 8

    def test_tree_data_picks_hyperbolic(self):
        D = graph_to_distance_matrix(np.array([((i - 1) // 2, i) for i in range(1, 31)]))
        hits = 0
        for seed in range(10):
            pm, _ = greedy_signature_search(D, GreedyConfig(seed=seed, max_components=1))
            hits += pm.components[0].curvature < 0
        assert hits >= 8

    def test_losses_non_increasing(self):
        D = graph_to_distance_matrix(np.array([((i - 1) // 2, i) for i in range(1, 16)]))
        cfg = GreedyConfig(
            seed=3,
            max_components=3,
            embed_cfg=RsgdConfig(train_lr=0.02, total_epochs=150, burn_in_epochs=15),
        )
        _, losses = greedy_signature_search(D, cfg)
        assert all(b <= a for a, b in zip(losses, losses[1:]))

    def test_pipeline_failure_carries_partial_signature(self):
        D = graph_to_distance_matrix(np.array([(0, 1), (1, 2), (2, 3)]))

        calls = {"n": 0}

        def flaky(components, seed):
            calls["n"] += 1
            if calls["n"] > 3:
                raise RuntimeError("boom")
            return 1.0 / calls["n"]

        cfg = GreedyConfig(pipeline=flaky, max_components=3)
        with pytest.raises(PipelineError) as info:
            greedy_signature_search(D, cfg)
        assert len(info.value.partial_signature) == 1

    def test_predictor_pipeline_runs(self):
        base = ProductManifold([(1, 2)])
        rng = np.random.default_rng(1)
        P = rng.normal(size=(40, 3))
        P /= np.linalg.norm(P, axis=1, keepdims=True)
        D = base.pairwise_distance(P)
        y = (P[:, 0] > 0).astype(int)
        cfg = GreedyConfig(
            pipeline="predictor",
            max_components=1,
            seed=0,
            embed_cfg=RsgdConfig(train_lr=0.02, total_epochs=120, burn_in_epochs=12),
        )
        pm, losses = greedy_signature_search(D, cfg, y=y)
        assert pm is not None and len(losses) == 1
        assert 0.0 <= losses[0] <= 1.0

    def test_predictor_pipeline_needs_labels(self):
        D = graph_to_distance_matrix(np.array([(0, 1), (1, 2), (2, 3)]))
        with pytest.raises(ValueError):
            greedy_signature_search(D, GreedyConfig(pipeline="predictor"))

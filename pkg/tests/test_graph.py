import numpy as np
import pytest

from gqco.graph import EDGE_FEATURE_DIM, NEIGHBOR_PAD, NODE_FEATURE_DIM, embed, frustration_count
from gqco.ising import IsingProblem, random_problem


def edge_feature(graph, i, j):
    for row, (a, b) in enumerate(graph.edge_index):
        if (a, b) == (i, j):
            return graph.edge_features[row]
    raise KeyError((i, j))


def test_edge_feature_hand_evaluated():
    p = IsingProblem(n=2, h=np.array([1.0, -1.0]), J={(0, 1): 0.5})
    g = embed(p)
    assert np.array_equal(edge_feature(g, 0, 1), [1.0, -1.0, 1.0, -1.0])
    # reversed direction swaps the field comparisons
    assert np.array_equal(edge_feature(g, 1, 0), [1.0, 1.0, -1.0, -1.0])


def test_zero_coefficients_give_zero_signs():
    p = IsingProblem(n=3, h=np.zeros(3), J={(0, 1): 0.0, (0, 2): 0.0, (1, 2): 0.0})
    g = embed(p)
    assert np.all(g.node_features == 0.0)
    assert np.all(g.edge_features == 0.0)


def test_uniform_ferromagnet_features():
    p = IsingProblem(n=3, h=np.zeros(3), J={(0, 1): -1.0, (0, 2): -1.0, (1, 2): -1.0})
    g = embed(p)
    # equal fields: the field-difference block is all zeros
    assert np.all(g.node_features[:, 1 : 1 + NEIGHBOR_PAD] == 0.0)
    for i, j in g.edge_index:
        assert np.array_equal(edge_feature(g, i, j), [-1.0, -1.0, -1.0, 0.0])


def test_feature_shapes_and_value_range():
    p = random_problem(4, rng_seed=3)
    g = embed(p)
    assert g.node_features.shape == (4, NODE_FEATURE_DIM)
    assert g.edge_features.shape == (12, EDGE_FEATURE_DIM)
    assert np.array_equal(g.node_features[:, 0], p.h)
    signs = g.node_features[:, 1:]
    assert set(np.unique(signs)) <= {-1.0, 0.0, 1.0}
    assert set(np.unique(g.edge_features)) <= {-1.0, 0.0, 1.0}
    # both directions of every coupling
    pairs = {tuple(e) for e in g.edge_index}
    assert pairs == {(i, j) for i, j in p.J} | {(j, i) for i, j in p.J}
    assert g.neighbor_order == ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


def test_padding_beyond_degree_is_zero():
    p = random_problem(3, rng_seed=1)
    g = embed(p)
    for block in range(3):
        start = 1 + block * NEIGHBOR_PAD
        assert np.all(g.node_features[:, start + 2 : start + NEIGHBOR_PAD] == 0.0)


def test_embed_deterministic():
    p = random_problem(5, rng_seed=8)
    a, b = embed(p), embed(p)
    assert np.array_equal(a.node_features, b.node_features)
    assert np.array_equal(a.edge_features, b.edge_features)


def permute_problem(p, perm):
    h = np.empty_like(p.h)
    for i, pi in enumerate(perm):
        h[pi] = p.h[i]
    J = {}
    for (i, j), v in p.J.items():
        a, b = sorted((perm[i], perm[j]))
        J[(a, b)] = v
    return IsingProblem(n=p.n, h=h, J=J)


def test_relabeling_equivariance():
    rng = np.random.default_rng(0)
    for n in (3, 4, 5):
        p = random_problem(n, rng_seed=int(rng.integers(1 << 30)))
        g = embed(p)
        perm = rng.permutation(n)
        q = permute_problem(p, perm)
        gq = embed(q)
        for i in range(n):
            # new node perm[i] sees old neighbors reordered by their new labels
            old_neighbors = g.neighbor_order[i]
            order = np.argsort([perm[j] for j in old_neighbors])
            assert gq.node_features[perm[i], 0] == g.node_features[i, 0]
            for block in range(3):
                start = 1 + block * NEIGHBOR_PAD
                old_block = g.node_features[i, start : start + len(old_neighbors)]
                new_block = gq.node_features[perm[i], start : start + len(old_neighbors)]
                assert np.array_equal(new_block, old_block[order])
        for row, (i, j) in enumerate(g.edge_index):
            expected = g.edge_features[row]
            assert np.array_equal(edge_feature(gq, perm[i], perm[j]), expected)


def test_frustration_triangle_cases():
    tri_pos = IsingProblem(n=3, h=np.zeros(3), J={(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
    tri_neg = IsingProblem(n=3, h=np.zeros(3), J={(0, 1): -1.0, (0, 2): -1.0, (1, 2): -1.0})
    assert frustration_count(tri_pos) == 1
    assert frustration_count(tri_neg) == 0


def test_frustration_complete_graph():
    J = {(i, j): 1.0 for i in range(4) for j in range(i + 1, 4)}
    p = IsingProblem(n=4, h=np.zeros(4), J=J)
    assert frustration_count(p) == 4  # C(4,3) triangles, all frustrated


def test_frustration_ignores_zero_couplings():
    p = IsingProblem(n=3, h=np.zeros(3), J={(0, 1): 1.0, (0, 2): 0.0, (1, 2): 1.0})
    assert frustration_count(p) == 0

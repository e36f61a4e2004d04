"""Graph representation of Ising problems with hand-crafted sign features.

Each variable becomes a node and each coupling an edge (both directions).
Node ``i`` carries its field value followed by three sign blocks computed
against its neighbors in ascending index order; every block is zero-padded
to ``N_MAX_SUPPORTED - 1`` entries so the encoder input width is static.
Edge features are direction-specific: the entries comparing the coupling
against the endpoint fields follow the (source, target) order of the edge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ising import N_MAX_SUPPORTED, IsingProblem

NEIGHBOR_PAD = N_MAX_SUPPORTED - 1
NODE_FEATURE_DIM = 1 + 3 * NEIGHBOR_PAD
EDGE_FEATURE_DIM = 4


@dataclass(frozen=True)
class ProblemGraph:
    """Feature tensors of one embedded problem."""

    n_nodes: int
    node_features: np.ndarray  # (n, NODE_FEATURE_DIM)
    edge_index: np.ndarray  # (E, 2) directed pairs (i, j), both directions
    edge_features: np.ndarray  # (E, EDGE_FEATURE_DIM)
    neighbor_order: tuple[tuple[int, ...], ...]  # ascending neighbors per node


def _sign(x: float) -> float:
    # sgn(0) = 0
    return float(np.sign(x))


def embed(problem: IsingProblem) -> ProblemGraph:
    """Compute node and edge feature tensors for one problem."""
    n = problem.n
    h = problem.h
    J = problem.J
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for i, j in J:
        neighbors[i].append(j)
        neighbors[j].append(i)
    neighbor_order = tuple(tuple(sorted(ns)) for ns in neighbors)

    node_features = np.zeros((n, NODE_FEATURE_DIM), dtype=np.float64)
    for i in range(n):
        node_features[i, 0] = h[i]
        for slot, j in enumerate(neighbor_order[i]):
            jij = J[(min(i, j), max(i, j))]
            node_features[i, 1 + slot] = _sign(h[i] - h[j])
            node_features[i, 1 + NEIGHBOR_PAD + slot] = _sign(h[i] - jij)
            node_features[i, 1 + 2 * NEIGHBOR_PAD + slot] = _sign(h[i] * h[j] * jij)

    edge_index = []
    edge_features = []
    for (a, b), jab in sorted(J.items()):
        for i, j in ((a, b), (b, a)):
            edge_index.append((i, j))
            edge_features.append(
                [
                    _sign(jab),
                    _sign(jab - h[i]),
                    _sign(jab - h[j]),
                    _sign(h[i] * h[j] * jab),
                ]
            )
    edge_index_arr = np.asarray(edge_index, dtype=np.int64).reshape(-1, 2)
    edge_features_arr = np.asarray(edge_features, dtype=np.float64).reshape(-1, EDGE_FEATURE_DIM)
    return ProblemGraph(
        n_nodes=n,
        node_features=node_features,
        edge_index=edge_index_arr,
        edge_features=edge_features_arr,
        neighbor_order=neighbor_order,
    )


def frustration_count(problem: IsingProblem) -> int:
    """Number of coupling triangles whose sign product is positive.

    Under the antiferromagnetic convention (J > 0 penalizes alignment) a
    positive product means no spin configuration satisfies all three pair
    terms at once. Missing or zero couplings never form a frustrated triangle.
    """
    n = problem.n
    J = problem.J
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            jij = J.get((i, j), 0.0)
            if jij == 0.0:
                continue
            for k in range(j + 1, n):
                product = jij * J.get((j, k), 0.0) * J.get((i, k), 0.0)
                if product > 0.0:
                    count += 1
    return count

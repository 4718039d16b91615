"""Adjacency construction from undirected edge lists."""

import numpy as np

from .exceptions import ValidationError

__all__ = ["build_adjacency", "random_edges"]


def build_adjacency(n_nodes, edges, self_loops=False, normalize=False):
    """Dense symmetric adjacency for an undirected graph.

    Duplicate edges (in either direction) collapse to a single unit entry.
    With ``self_loops`` the identity is added; with ``normalize`` the result
    becomes ``D^-1/2 A D^-1/2`` where ``D`` holds the row sums.
    """
    if n_nodes < 1:
        raise ValidationError(f"graph needs at least one node, got {n_nodes}")
    a = np.zeros((n_nodes, n_nodes))
    for u, v in edges:
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise ValidationError(f"edge ({u}, {v}) references a node outside 0..{n_nodes - 1}")
        a[u, v] = a[v, u] = 1.0
    if self_loops:
        a = a + np.eye(n_nodes)
    if normalize:
        deg = a.sum(axis=1)
        if np.any(deg == 0.0):
            isolated = np.flatnonzero(deg == 0.0).tolist()
            raise ValidationError(
                f"cannot normalize: nodes {isolated} have zero degree (enable self_loops)"
            )
        scale = 1.0 / np.sqrt(deg)
        a = scale[:, None] * a * scale[None, :]
        # guard against last-bit asymmetry from the two-sided scaling
        a = 0.5 * (a + a.T)
    return a


def random_edges(n_nodes, p, rng):
    """Erdos-Renyi edge list on top of a ring, so no node is isolated."""
    edges = {(i, (i + 1) % n_nodes) for i in range(n_nodes)} if n_nodes > 1 else set()
    for u in range(n_nodes):
        for v in range(u + 1, n_nodes):
            if rng.random() < p:
                edges.add((u, v))
    return sorted(tuple(sorted(e)) for e in edges)

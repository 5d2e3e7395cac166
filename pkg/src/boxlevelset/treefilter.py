"""Minimum-spanning-tree feature filter.

A 4-connected pixel lattice is reduced to its minimum spanning tree under
feature-distance edge weights. Filtering then averages every pixel with all
others, weighted by ``exp(-D / sigma)`` where ``D`` is the summed edge weight
along the tree path. Because the kernel factorises over path edges, the
aggregation runs exactly in linear time with one leaf-to-root and one
root-to-leaf sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InvalidArgumentError, PixelGrid

__all__ = ["PixelTree", "DisjointSet", "lattice_edges", "build_mst", "tree_filter_apply"]


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True, eq=False)
class PixelTree:
    """Spanning tree over ``height * width`` pixels, rooted at pixel 0.

    ``parent[root] == root`` and ``parent_edge_weight[root] == 0``.
    ``traversal_order`` is breadth-first from the root, so parents always
    precede their children.
    """

    height: int
    width: int
    parent: np.ndarray
    parent_edge_weight: np.ndarray
    traversal_order: np.ndarray
    edges: np.ndarray

    @property
    def node_count(self):
        return self.height * self.width

    @property
    def root(self):
        return int(self.traversal_order[0])

    @property
    def total_weight(self):
        return float(self.parent_edge_weight.sum())


def lattice_edges(height, width):
    """4-neighbour edges ``(a, b)`` with ``a < b`` in deterministic tie order.

    Edges are ordered by their lower-right endpoint in row-major order, and
    for a shared endpoint the horizontal edge precedes the vertical one.
    """
    idx = np.arange(height * width).reshape(height, width)
    # key = 2 * endpoint + (0 horizontal | 1 vertical)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    keys = np.concatenate([2 * horiz[:, 1], 2 * vert[:, 1] + 1])
    edges = np.concatenate([horiz, vert]).reshape(-1, 2)
    return edges[np.argsort(keys, kind="stable")]


def build_mst(guide):
    """Kruskal minimum spanning tree of the pixel lattice of ``guide``.

    Edge weight is the Euclidean distance between the two pixels' feature
    vectors. Equal weights are resolved by :func:`lattice_edges` order.
    """
    data = guide.data if isinstance(guide, PixelGrid) else np.asarray(guide, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    height, width = data.shape[:2]
    n = height * width
    flat = data.reshape(n, -1)

    edges = lattice_edges(height, width)
    if len(edges):
        weights = np.sqrt(np.sum((flat[edges[:, 0]] - flat[edges[:, 1]]) ** 2, axis=1))
        order = np.argsort(weights, kind="stable")
    else:
        weights = np.zeros(0)
        order = np.zeros(0, dtype=np.int64)

    dsu = DisjointSet(n)
    chosen = []
    for e in order.tolist():
        a, b = edges[e]
        if dsu.union(int(a), int(b)):
            chosen.append(e)
            if len(chosen) == n - 1:
                break
    chosen = np.asarray(chosen, dtype=np.int64)
    return _root_tree(height, width, edges[chosen], weights[chosen])


def _root_tree(height, width, tree_edges, tree_weights):
    n = height * width
    adjacency = [[] for _ in range(n)]
    for (a, b), w in zip(tree_edges.tolist(), tree_weights.tolist()):
        adjacency[a].append((b, w))
        adjacency[b].append((a, w))

    parent = np.full(n, -1, dtype=np.int64)
    parent_weight = np.zeros(n)
    parent[0] = 0
    order = [0]
    head = 0
    while head < len(order):
        node = order[head]
        head += 1
        for child, w in adjacency[node]:
            if parent[child] == -1:
                parent[child] = node
                parent_weight[child] = w
                order.append(child)
    if len(order) != n:
        raise InvalidArgumentError("edges do not span the lattice")
    return PixelTree(
        height=height,
        width=width,
        parent=parent,
        parent_edge_weight=parent_weight,
        traversal_order=np.asarray(order, dtype=np.int64),
        edges=np.asarray(tree_edges, dtype=np.int64).reshape(-1, 2),
    )


def tree_filter_apply(tree, signal, sigma):
    """Normalised tree-kernel aggregation of every channel of ``signal``.

    Parameters
    ----------
    tree : PixelTree
    signal : PixelGrid
        Must have ``tree.node_count`` pixels.
    sigma : float
        Decay scale of the path-distance kernel, > 0.

    Returns
    -------
    PixelGrid
        ``out_i = sum_j K(i, j) s_j / sum_j K(i, j)`` per channel.
    """
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be > 0, got {sigma}")
    data = signal.data
    height, width, channels = data.shape
    if (height, width) != (tree.height, tree.width):
        raise InvalidArgumentError(
            f"signal is {height}x{width} but tree spans {tree.height}x{tree.width}"
        )
    n = height * width
    # last column carries the kernel normaliser
    acc = np.ones((n, channels + 1))
    acc[:, :channels] = data.reshape(n, channels)

    factor = np.exp(-tree.parent_edge_weight / sigma)
    parent = tree.parent
    order = tree.traversal_order.tolist()

    up = acc.copy()
    for node in reversed(order[1:]):
        up[parent[node]] += factor[node] * up[node]

    down = up.copy()
    for node in order[1:]:
        f = factor[node]
        down[node] = up[node] + f * (down[parent[node]] - f * up[node])

    out = down[:, :channels] / down[:, channels:]
    return PixelGrid(out.reshape(height, width, channels))

"""Slow, independent reference computations used to check the fast paths.

Nothing in the solver imports this module; tests and ``boxlevelset selftest``
do.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np

__all__ = [
    "central_differences",
    "frozen_objective_gradient_fd",
    "tree_path_distances",
    "brute_tree_filter",
    "exhaustive_mst_weight",
    "chebyshev_init_oracle",
    "convolve3x3_clamped",
    "weighted_means_loop",
    "relative_error",
]

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


def relative_error(value, reference):
    value = np.asarray(value, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    return float(np.linalg.norm(value - reference) / max(np.linalg.norm(reference), 1e-300))


def central_differences(func, x, h=1e-6):
    """Central-difference gradient of scalar ``func`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        saved = x[idx]
        x[idx] = saved + h
        f_plus = func(x)
        x[idx] = saved - h
        f_minus = func(x)
        x[idx] = saved
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def frozen_objective_gradient_fd(phi, image_term, feature_term, config, box_region=None, h=1e-5):
    """Finite-difference gradient of the per-instance objective with region
    means frozen at their values for ``phi``."""
    from .energy import region_means
    from .evolution import objective

    means = (region_means(image_term, phi), region_means(feature_term, phi))

    def total(values):
        return objective(values, image_term, feature_term, config, box_region, means)[2]

    return central_differences(total, phi, h)


def _tree_adjacency(tree):
    adjacency = [[] for _ in range(tree.node_count)]
    for node in range(tree.node_count):
        parent = int(tree.parent[node])
        if parent != node:
            w = float(tree.parent_edge_weight[node])
            adjacency[node].append((parent, w))
            adjacency[parent].append((node, w))
    return adjacency


def tree_path_distances(tree):
    """All-pairs path lengths on the tree by one traversal per source."""
    n = tree.node_count
    adjacency = _tree_adjacency(tree)
    dist = np.full((n, n), np.inf)
    for source in range(n):
        dist[source, source] = 0.0
        queue = deque([source])
        while queue:
            node = queue.popleft()
            for other, w in adjacency[node]:
                if not np.isfinite(dist[source, other]):
                    dist[source, other] = dist[source, node] + w
                    queue.append(other)
    return dist


def brute_tree_filter(tree, signal, sigma):
    """``sum_j exp(-D_ij / sigma) s_j / sum_j exp(-D_ij / sigma)`` by explicit sums."""
    data = np.asarray(signal.data if hasattr(signal, "data") else signal, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    height, width, channels = data.shape
    flat = data.reshape(-1, channels)
    kernel = np.exp(-tree_path_distances(tree) / sigma)
    out = np.zeros_like(flat)
    for i in range(flat.shape[0]):
        weights = kernel[i]
        out[i] = (weights[:, None] * flat).sum(axis=0) / weights.sum()
    return out.reshape(height, width, channels)


def exhaustive_mst_weight(guide):
    """Minimum total weight over every spanning tree of the 4-connected lattice."""
    data = np.asarray(guide, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    height, width = data.shape[:2]
    n = height * width
    if n == 1:
        return 0.0
    flat = data.reshape(n, -1)
    edges = []
    for r in range(height):
        for c in range(width):
            i = r * width + c
            if c + 1 < width:
                edges.append((i, i + 1))
            if r + 1 < height:
                edges.append((i, i + width))
    weights = [float(np.linalg.norm(flat[a] - flat[b])) for a, b in edges]

    best = np.inf
    for subset in itertools.combinations(range(len(edges)), n - 1):
        labels = list(range(n))

        def root(a):
            while labels[a] != a:
                a = labels[a]
            return a

        acyclic = True
        for e in subset:
            ra, rb = root(edges[e][0]), root(edges[e][1])
            if ra == rb:
                acyclic = False
                break
            labels[ra] = rb
        if acyclic:
            best = min(best, sum(weights[e] for e in subset))
    return best


def chebyshev_init_oracle(box, scale, clamp=3.0):
    """Signed Chebyshev distance from each pixel centre of ``box`` to the
    boundary of the box shrunk by ``scale``, by minimising over boundary
    samples on a half-pixel lattice (which contains every nearest point)."""
    cx, cy = box.width / 2.0, box.height / 2.0
    hx, hy = scale * box.width / 2.0, scale * box.height / 2.0
    left, right, top, bottom = cx - hx, cx + hx, cy - hy, cy + hy

    def samples(lo, hi):
        inner = np.arange(np.ceil(lo * 2) / 2, hi, 0.5)
        return np.unique(np.concatenate([[lo, hi], inner[(inner >= lo) & (inner <= hi)]]))

    xs, ys = samples(left, right), samples(top, bottom)
    boundary = np.concatenate([
        np.stack([xs, np.full_like(xs, top)], axis=1),
        np.stack([xs, np.full_like(xs, bottom)], axis=1),
        np.stack([np.full_like(ys, left), ys], axis=1),
        np.stack([np.full_like(ys, right), ys], axis=1),
    ])
    out = np.zeros((box.height, box.width))
    for r in range(box.height):
        for c in range(box.width):
            px, py = c + 0.5, r + 0.5
            d = np.min(np.maximum(np.abs(boundary[:, 0] - px), np.abs(boundary[:, 1] - py)))
            inside = left <= px <= right and top <= py <= bottom
            out[r, c] = d if inside else -d
    return np.clip(out, -clamp, clamp)


def convolve3x3_clamped(image, kernel):
    """Correlation with a 3x3 kernel using edge-clamped borders, by loops."""
    height, width = image.shape
    out = np.zeros((height, width))
    for r in range(height):
        for c in range(width):
            acc = 0.0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr = min(max(r + dr, 0), height - 1)
                    cc = min(max(c + dc, 0), width - 1)
                    acc += kernel[dr + 1, dc + 1] * image[rr, cc]
            out[r, c] = acc
    return out


def weighted_means_loop(data, phi):
    """Sigmoid-weighted inside/outside means by explicit per-pixel sums."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    height, width, channels = data.shape
    c1, c2 = np.zeros(channels), np.zeros(channels)
    w_in = w_out = 0.0
    for r in range(height):
        for c in range(width):
            s = 1.0 / (1.0 + np.exp(-phi[r, c]))
            w_in += s
            w_out += 1.0 - s
            c1 += s * data[r, c]
            c2 += (1.0 - s) * data[r, c]
    return c1 / w_in, c2 / w_out

"""Quick oracle checks runnable from the command line."""
from __future__ import annotations

import numpy as np

from . import oracles
from .boxproj import box_projection_gradient, box_projection_loss
from .core import BoxAnnotation, EvolutionConfig, PixelGrid
from .energy import region_means
from .evolution import initialize_phi, objective_gradient
from .treefilter import build_mst, tree_filter_apply


def _gradient(rng):
    config = EvolutionConfig()
    worst = 0.0
    for _ in range(5):
        h, w = rng.integers(2, 9, size=2)
        phi = rng.normal(0.0, 2.0, (h, w))
        image, features = rng.random((h, w, 1)), rng.random((h, w, 9))
        analytic = -objective_gradient(phi, image, features, config)
        numeric = oracles.frozen_objective_gradient_fd(phi, image, features, config)
        worst = max(worst, oracles.relative_error(analytic, numeric))
    return worst < 1e-4, f"max relative error {worst:.2e}"


def _tree_filter(rng):
    worst = 0.0
    for _ in range(5):
        h, w = rng.integers(1, 9, size=2)
        tree = build_mst(PixelGrid(rng.random((h, w, 3))))
        signal = PixelGrid(rng.random((h, w, 2)))
        fast = tree_filter_apply(tree, signal, 0.5).data
        worst = max(worst, float(np.abs(fast - oracles.brute_tree_filter(tree, signal, 0.5)).max()))
    return worst < 1e-9, f"max abs error {worst:.2e}"


def _mst(rng):
    gaps = []
    for shape in ((3, 3), (2, 4), (1, 5)):
        guide = rng.random(shape + (2,))
        gaps.append(abs(build_mst(PixelGrid(guide)).total_weight - oracles.exhaustive_mst_weight(guide)))
    return max(gaps) < 1e-12, f"max weight gap {max(gaps):.2e}"


def _box_projection(rng):
    ones, zeros = np.ones((5, 4)), np.zeros((5, 4))
    mask = rng.uniform(0.05, 0.95, (4, 5))
    analytic = box_projection_gradient(mask)
    numeric = oracles.central_differences(box_projection_loss, mask, 1e-6)
    err = oracles.relative_error(analytic, numeric)
    ok = abs(box_projection_loss(ones)) < 1e-5 and abs(box_projection_loss(zeros) - 2) < 1e-5
    return ok and err < 1e-5, f"gradient relative error {err:.2e}"


def _region_means(rng):
    data, phi = rng.random((4, 6, 3)), rng.normal(0.0, 2.0, (4, 6))
    got = np.concatenate(region_means(data, phi))
    ref = np.concatenate(oracles.weighted_means_loop(data, phi))
    err = float(np.abs(got - ref).max())
    return err < 1e-10, f"max abs error {err:.2e}"


def _initialization(rng):
    box = BoxAnnotation(1, 0, 0, 6, 6)
    err = float(np.abs(initialize_phi(box, scale=0.5).phi - oracles.chebyshev_init_oracle(box, 0.5)).max())
    return err == 0.0, f"max abs error {err:.2e}"


CHECKS = {
    "objective gradient vs finite differences": _gradient,
    "tree filter vs all-pairs aggregation": _tree_filter,
    "MST weight vs exhaustive search": _mst,
    "box projection loss and gradient": _box_projection,
    "region means vs per-pixel sums": _region_means,
    "signed distance init vs brute force": _initialization,
}


def run(seed=0, echo=print):
    rng = np.random.default_rng(seed)
    passed = True
    for name, check in CHECKS.items():
        ok, detail = check(rng)
        passed &= bool(ok)
        echo(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return passed

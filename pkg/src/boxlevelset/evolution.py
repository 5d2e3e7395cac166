"""Gradient-flow evolution of one instance's level set.

The per-instance objective is

    combined Chan-Vese energy(phi) + alpha * box projection loss(sigmoid(phi))

and is minimised by explicit Euler steps on ``phi``. Region means are
refreshed before each gradient evaluation and held fixed while it is taken.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .boxproj import box_projection_gradient, box_projection_loss
from .core import (
    EvolutionConfig,
    InstanceMask,
    LevelSetField,
    NumericalFailure,
    PixelGrid,
)
from .energy import (
    EnergyBreakdown,
    combined_energy,
    length_gradient,
    region_means,
    sigmoid_char,
)

__all__ = [
    "PHI_CLAMP",
    "INIT_CLAMP",
    "DESCENT_TOL",
    "MAX_HALVINGS",
    "EvolutionState",
    "initialize_phi",
    "objective",
    "make_state",
    "objective_gradient",
    "evolve_step",
    "evolve",
]

log = logging.getLogger(__name__)

PHI_CLAMP = 50.0
INIT_CLAMP = 3.0
DESCENT_TOL = 1e-9
MAX_HALVINGS = 10
CHECKER_TILE = 4


@dataclass(frozen=True)
class EvolutionState:
    phi: LevelSetField
    iteration: int
    energy: EnergyBreakdown
    box_loss: float
    total_objective: float


def _values(grid):
    values = grid.data if isinstance(grid, PixelGrid) else np.asarray(grid, dtype=np.float64)
    return values[:, :, None] if values.ndim == 2 else values


def _phi_values(phi):
    return phi.phi if isinstance(phi, LevelSetField) else np.asarray(phi, dtype=np.float64)


def initialize_phi(box, mode="signed_distance", scale=1.0, frame=None):
    """Initial level set for ``box``, sampled on ``frame`` (default: the box).

    The box is shrunk by ``scale`` about its centre. ``signed_distance`` is
    the Chebyshev distance from each pixel centre to the shrunk rectangle's
    boundary, positive inside and clamped to [-3, 3]; ``centered_rect`` is +1
    on the closed shrunk rectangle and -1 elsewhere; ``checkerboard``
    alternates +-1 over 4x4 pixel tiles.
    """
    frame = frame or box
    ys = np.arange(frame.y0, frame.y1) + 0.5
    xs = np.arange(frame.x0, frame.x1) + 0.5
    y, x = np.meshgrid(ys, xs, indexing="ij")

    if mode == "checkerboard":
        tiles = ((y - 0.5 - box.y0) // CHECKER_TILE + (x - 0.5 - box.x0) // CHECKER_TILE) % 2
        return LevelSetField(frame, np.where(tiles == 0, 1.0, -1.0))

    cx, cy = (box.x0 + box.x1) / 2.0, (box.y0 + box.y1) / 2.0
    # per-axis margin to the shrunk rectangle, negative when outside
    dx = scale * box.width / 2.0 - np.abs(x - cx)
    dy = scale * box.height / 2.0 - np.abs(y - cy)
    inside = (dx >= 0) & (dy >= 0)
    if mode == "centered_rect":
        return LevelSetField(frame, np.where(inside, 1.0, -1.0))
    if mode == "signed_distance":
        outside = np.maximum(np.maximum(-dx, 0.0), np.maximum(-dy, 0.0))
        dist = np.where(inside, np.minimum(dx, dy), -outside)
        return LevelSetField(frame, np.clip(dist, -INIT_CLAMP, INIT_CLAMP))
    raise ValueError(f"unknown init mode {mode!r}")


def objective(phi, image_term, feature_term, config, box_region=None, means=None):
    """Energy breakdown, box loss and total objective for ``phi``.

    Returns ``(energy, box_loss, total)``. Passing ``means`` evaluates the
    objective with frozen region means (see :func:`combined_energy`).
    """
    phi_values = _phi_values(phi)
    energy = combined_energy(image_term, feature_term, phi_values, config, means)
    box_loss = box_projection_loss(sigmoid_char(phi_values), box_region, config.eps_dice)
    return energy, box_loss, energy.total + config.alpha * box_loss


def make_state(phi, image_term, feature_term, config, box_region=None, iteration=0):
    energy, box_loss, total = objective(phi, image_term, feature_term, config, box_region)
    return EvolutionState(phi, iteration, energy, box_loss, total)


def objective_gradient(state, image_term, feature_term, config, box_region=None):
    """Descent direction ``-dObjective/dphi`` at ``state.phi``.

    Region means are computed from the current level set and treated as
    constants. The length contribution is the exact derivative of the
    discrete length term, i.e. the discrete curvature flow of the sigmoid
    map; the box term is chained through ``mask = sigmoid(phi)``.
    """
    phi = state.phi.phi if isinstance(state, EvolutionState) else _phi_values(state)
    image_term = _values(image_term)
    feature_term = _values(feature_term)
    u = sigmoid_char(phi)

    bracket = np.zeros_like(phi)
    for weight, data in ((config.lambda1, image_term), (config.lambda2, feature_term)):
        if weight == 0:
            continue
        c1, c2 = region_means(data, phi)
        bracket += weight * (((data - c1) ** 2).sum(axis=2) - ((data - c2) ** 2).sum(axis=2))

    d_u = bracket
    d_u = d_u + (config.lambda1 + config.lambda2) * length_gradient(u, config.gamma, config.eps_curv)
    if config.alpha:
        d_u = d_u + config.alpha * box_projection_gradient(u, box_region, config.eps_dice)
    return -(u * (1.0 - u)) * d_u


def evolve_step(state, flow, delta_t, image_term, feature_term, config, box_region=None):
    """One explicit Euler step ``phi + delta_t * flow``, clamped to +-50."""
    flow = np.asarray(flow, dtype=np.float64)
    phi = state.phi.phi
    if flow.shape != phi.shape:
        raise ValueError(f"flow shape {flow.shape} does not match phi {phi.shape}")
    iteration = state.iteration + 1
    updated = phi + delta_t * flow
    if not np.all(np.isfinite(updated)):
        raise NumericalFailure(f"non-finite level set at iteration {iteration}", iteration)
    new_phi = LevelSetField(state.phi.box, np.clip(updated, -PHI_CLAMP, PHI_CLAMP))
    new_state = make_state(new_phi, image_term, feature_term, config, box_region, iteration)
    if not np.isfinite(new_state.total_objective):
        raise NumericalFailure(f"non-finite objective at iteration {iteration}", iteration)
    return new_state


def _descend(state, image_term, feature_term, config, box_region):
    flow = objective_gradient(state, image_term, feature_term, config, box_region)
    delta_t = config.delta_t
    for _ in range(MAX_HALVINGS + 1):
        candidate = evolve_step(state, flow, delta_t, image_term, feature_term, config, box_region)
        if candidate.total_objective <= state.total_objective + DESCENT_TOL:
            return candidate
        delta_t *= 0.5
    # no admissible step: hold phi, which also counts toward convergence
    return EvolutionState(
        state.phi, state.iteration + 1, state.energy, state.box_loss, state.total_objective
    )


def evolve(phi0, image_term, feature_term, config=None, box_region=None, image_shape=None,
           instance_id=None):
    """Evolve ``phi0`` to convergence and threshold it at zero.

    Parameters
    ----------
    phi0 : LevelSetField
        Initial level set; its ``box`` is the evolution frame in image
        coordinates.
    image_term, feature_term : PixelGrid or ndarray
        Data terms already cropped to the frame.
    config : EvolutionConfig, optional
    box_region : ndarray, optional
        Binary annotation region inside the frame. Defaults to the whole
        frame, which is the box-restricted setting.
    image_shape : tuple, optional
        ``(H, W)`` of the full image the mask is embedded into. Defaults to
        the smallest image containing the frame.
    instance_id : int, optional
        Defaults to ``phi0.box.id``.

    Returns
    -------
    InstanceMask
    """
    config = config or EvolutionConfig()
    image_term = _values(image_term)
    feature_term = _values(feature_term)
    frame = phi0.box
    state = make_state(phi0.copy(), image_term, feature_term, config, box_region)

    trajectory = []
    calm = 0
    while state.iteration < config.max_iters:
        previous = state.total_objective
        state = _descend(state, image_term, feature_term, config, box_region)
        trajectory.append(state.total_objective)
        change = abs(previous - state.total_objective) / max(abs(previous), 1e-300)
        calm = calm + 1 if change < config.rel_tol else 0
        if calm >= config.patience:
            break
    log.debug("instance %s: %d iterations, objective %.6g",
              frame.id, state.iteration, state.total_objective)

    height, width = image_shape or (frame.y1, frame.x1)
    mask = np.zeros((height, width), dtype=np.uint8)
    probability = np.zeros((height, width))
    rows, cols = frame.slices
    mask[rows, cols] = state.phi.phi > 0
    probability[rows, cols] = sigmoid_char(state.phi.phi)
    return InstanceMask(
        id=frame.id if instance_id is None else instance_id,
        mask=mask,
        energy_trajectory=trajectory,
        iterations_run=state.iteration,
        probability=probability,
        final_objective=state.total_objective,
        level_set=state.phi,
    )

"""Box projection term: 1-D dice between axis max-projections.

A soft mask is reduced to its per-column and per-row maxima and compared to
the same projections of the binary box region. The loss is zero exactly when
the mask reaches 1 in every row and column of the box.
"""
from __future__ import annotations

import numpy as np

from .core import InvalidArgumentError, PixelGrid

__all__ = [
    "axis_projection",
    "dice_1d",
    "box_projection_loss",
    "box_projection_gradient",
]


def _mask(mask):
    values = mask.data if isinstance(mask, PixelGrid) else np.asarray(mask, dtype=np.float64)
    if values.ndim == 3:
        if values.shape[2] != 1:
            raise InvalidArgumentError(f"mask must be single-channel, got {values.shape[2]}")
        values = values[:, :, 0]
    return values


def _region(mask, box_region):
    if box_region is None:
        return np.ones_like(mask)
    region = _mask(box_region)
    if region.shape != mask.shape:
        raise InvalidArgumentError(f"box region {region.shape} does not match mask {mask.shape}")
    return region


def axis_projection(mask, axis):
    """Per-column maxima for ``axis="x"``, per-row maxima for ``axis="y"``."""
    mask = _mask(mask)
    if axis == "x":
        return mask.max(axis=0)
    if axis == "y":
        return mask.max(axis=1)
    raise InvalidArgumentError(f"axis must be 'x' or 'y', got {axis!r}")


def dice_1d(p, q, eps=1e-6):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise InvalidArgumentError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(2.0 * np.dot(p, q) / (np.dot(p, p) + np.dot(q, q) + eps))


def box_projection_loss(mask, box_region=None, eps_dice=1e-6):
    """``(1 - dice_x) + (1 - dice_y)``, in [0, 2].

    ``box_region`` defaults to all ones, i.e. the mask frame is the box.
    """
    mask = _mask(mask)
    region = _region(mask, box_region)
    loss = 0.0
    for axis in ("x", "y"):
        loss += 1.0 - dice_1d(axis_projection(mask, axis), axis_projection(region, axis), eps_dice)
    return loss


def _dice_loss_grad(p, q, eps):
    s = np.dot(p, p) + np.dot(q, q) + eps
    return -(2.0 * q / s - 4.0 * np.dot(p, q) * p / (s * s))


def box_projection_gradient(mask, box_region=None, eps_dice=1e-6):
    """Gradient of :func:`box_projection_loss` with respect to the mask.

    The max projection passes its gradient to a single pixel per column
    (resp. row): the first maximum in scan order. All other pixels get 0.
    """
    mask = _mask(mask)
    region = _region(mask, box_region)
    grad = np.zeros_like(mask)

    cols = np.arange(mask.shape[1])
    top = mask.argmax(axis=0)
    gx = _dice_loss_grad(mask[top, cols], region.max(axis=0), eps_dice)
    np.add.at(grad, (top, cols), gx)

    rows = np.arange(mask.shape[0])
    left = mask.argmax(axis=1)
    gy = _dice_loss_grad(mask[rows, left], region.max(axis=1), eps_dice)
    np.add.at(grad, (rows, left), gy)
    return grad

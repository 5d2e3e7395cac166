"""Box-restricted Chan-Vese energy with a sigmoid characteristic function.

Every function works on the pixels of one evolution frame (normally the
annotation box). ``data`` is ``(h, w, C)`` and ``phi`` is ``(h, w)``; the
package types ``PixelGrid`` and ``LevelSetField`` are accepted as well.
Integrals are plain pixel sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import LevelSetField, PixelGrid

__all__ = [
    "MEAN_GUARD",
    "EnergyBreakdown",
    "sigmoid_char",
    "sigmoid_prime",
    "region_means",
    "forward_differences",
    "length_term",
    "length_gradient",
    "chanvese_energy",
    "combined_energy",
]

MEAN_GUARD = 1e-12


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy components of one data term, or a weighted combination.

    For a combined energy ``image_total`` and ``feature_total`` hold the
    unweighted totals of the two data terms, and every other field is the
    ``lambda1 * image + lambda2 * feature`` combination.
    """

    region_in: float
    region_out: float
    length: float
    total: float
    image_total: float | None = None
    feature_total: float | None = None


def _phi(phi):
    return phi.phi if isinstance(phi, LevelSetField) else np.asarray(phi, dtype=np.float64)


def _data(data):
    values = data.data if isinstance(data, PixelGrid) else np.asarray(data, dtype=np.float64)
    return values[:, :, None] if values.ndim == 2 else values


def sigmoid_char(phi):
    """Soft inside indicator ``1 / (1 + exp(-phi))``."""
    return expit(_phi(phi))


def sigmoid_prime(phi):
    u = sigmoid_char(phi)
    return u * (1.0 - u)


def region_means(data, phi, guard=MEAN_GUARD):
    """Sigmoid-weighted inside and outside means, one value per channel."""
    data = _data(data)
    u = sigmoid_char(phi)[:, :, None]
    c1 = (data * u).sum(axis=(0, 1)) / (u.sum() + guard)
    c2 = (data * (1.0 - u)).sum(axis=(0, 1)) / ((1.0 - u).sum() + guard)
    return c1, c2


def forward_differences(u):
    """Forward differences along x and y; zero on the last column/row."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def length_term(u, gamma, eps_curv=1e-8):
    """``gamma * sum sqrt(gx^2 + gy^2 + eps^2)`` of a characteristic map ``u``."""
    gx, gy = forward_differences(u)
    return gamma * float(np.sqrt(gx * gx + gy * gy + eps_curv * eps_curv).sum())


def length_gradient(u, gamma, eps_curv=1e-8):
    """Derivative of :func:`length_term` with respect to ``u``.

    This is the exact adjoint of the forward-difference stencil, i.e. minus a
    backward-difference divergence of the normalised gradient field.
    """
    gx, gy = forward_differences(u)
    norm = np.sqrt(gx * gx + gy * gy + eps_curv * eps_curv)
    nx = gx / norm
    ny = gy / norm
    # the clamped last column/row does not depend on u
    nx[:, -1] = 0.0
    ny[-1, :] = 0.0
    grad = -nx - ny
    grad[:, 1:] += nx[:, :-1]
    grad[1:, :] += ny[:-1, :]
    return gamma * grad


def chanvese_energy(data, phi, gamma, eps_curv=1e-8, means=None):
    """Chan-Vese energy of one data term.

    ``means`` optionally freezes ``(c1, c2)``; by default they are the
    region means of the current ``phi``.
    """
    data = _data(data)
    phi = _phi(phi)
    c1, c2 = region_means(data, phi) if means is None else means
    u = sigmoid_char(phi)
    region_in = float((((data - c1) ** 2).sum(axis=2) * u).sum())
    region_out = float((((data - c2) ** 2).sum(axis=2) * (1.0 - u)).sum())
    length = length_term(u, gamma, eps_curv)
    return EnergyBreakdown(region_in, region_out, length, region_in + region_out + length)


def combined_energy(image_term, feature_term, phi, config, means=None):
    """``lambda1 * E(image) + lambda2 * E(features)`` over the same level set.

    ``means`` optionally freezes the region means as
    ``((cu1, cu2), (cf1, cf2))``.
    """
    image_means, feature_means = means if means is not None else (None, None)
    e_u = chanvese_energy(image_term, phi, config.gamma, config.eps_curv, image_means)
    e_f = chanvese_energy(feature_term, phi, config.gamma, config.eps_curv, feature_means)
    l1, l2 = config.lambda1, config.lambda2
    return EnergyBreakdown(
        region_in=l1 * e_u.region_in + l2 * e_f.region_in,
        region_out=l1 * e_u.region_out + l2 * e_f.region_out,
        length=l1 * e_u.length + l2 * e_f.length,
        total=l1 * e_u.total + l2 * e_f.total,
        image_total=e_u.total,
        feature_total=e_f.total,
    )

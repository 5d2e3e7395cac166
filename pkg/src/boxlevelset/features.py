"""Image and structural data terms.

The structural term is a fixed 9-channel stack built from the image (no
learned features): three intensity channels, horizontal and vertical Sobel
magnitudes, two Gaussian smoothings and two coordinate ramps. Each channel is
min-max normalised and the whole stack is then smoothed by the tree filter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from .core import EvolutionConfig, PixelGrid
from .treefilter import build_mst, tree_filter_apply

__all__ = [
    "FEATURE_CHANNELS",
    "FeatureStack",
    "normalize_image",
    "handcrafted_channels",
    "build_feature_stack",
]

FEATURE_CHANNELS = (
    "intensity_0",
    "intensity_1",
    "intensity_2",
    "sobel_x",
    "sobel_y",
    "gauss_1",
    "gauss_2",
    "coord_x",
    "coord_y",
)


@dataclass(frozen=True, eq=False)
class FeatureStack:
    grid: PixelGrid
    channel_labels: tuple = FEATURE_CHANNELS

    def __post_init__(self):
        if self.grid.channels != len(self.channel_labels):
            raise ValueError(
                f"{self.grid.channels} channels but {len(self.channel_labels)} labels"
            )


def _minmax(channel):
    lo, hi = channel.min(), channel.max()
    if hi - lo <= 0:
        return np.full_like(channel, 0.5)
    return (channel - lo) / (hi - lo)


def normalize_image(image):
    """Per-channel affine map onto [0, 1]; constant channels become 0.5."""
    data = image.data
    out = np.empty_like(data)
    for k in range(data.shape[2]):
        out[:, :, k] = _minmax(data[:, :, k])
    return PixelGrid(out)


def handcrafted_channels(image):
    """The 9 normalised channels before tree filtering, shape ``(H, W, 9)``."""
    data = image.data
    height, width, channels = data.shape
    gray = data.mean(axis=2)

    intensity = [data[:, :, k] if k < channels else gray for k in range(3)]
    # edge-clamped borders throughout
    sobel_x = np.abs(ndi.sobel(gray, axis=1, mode="nearest"))
    sobel_y = np.abs(ndi.sobel(gray, axis=0, mode="nearest"))
    gauss_1 = ndi.gaussian_filter(gray, sigma=1.0, mode="nearest", truncate=2.0)
    gauss_2 = ndi.gaussian_filter(gray, sigma=2.0, mode="nearest", truncate=2.0)
    cols, rows = np.meshgrid(np.arange(width) / width, np.arange(height) / height)

    stack = [*intensity, sobel_x, sobel_y, gauss_1, gauss_2, cols, rows]
    return np.stack([_minmax(np.asarray(c, dtype=np.float64)) for c in stack], axis=2)


def build_feature_stack(image, config=None):
    """Tree-filtered structural features for a normalised image.

    The minimum spanning tree is built over the unfiltered stack itself, then
    used to smooth every channel with decay ``config.feature_sigma``.
    """
    config = config or EvolutionConfig()
    raw = PixelGrid(handcrafted_channels(image))
    tree = build_mst(raw)
    filtered = tree_filter_apply(tree, raw, config.feature_sigma).data
    # the kernel average is convex; clip only removes rounding spill
    return FeatureStack(PixelGrid(np.clip(filtered, 0.0, 1.0)))

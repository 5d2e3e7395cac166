"""Synthetic scenes with analytic ground truth, and mask IoU."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoxAnnotation, InstanceMask, InvalidArgumentError, PixelGrid

__all__ = ["Shape", "SceneSpec", "rasterize", "generate_scene", "evaluate_iou", "BOX_MARGIN"]

SHAPE_KINDS = ("disk", "rectangle", "ellipse")
BOX_MARGIN = 2


@dataclass(frozen=True)
class Shape:
    """A filled shape in continuous image coordinates.

    ``center`` is ``(x, y)``; ``radii`` is ``(rx, ry)``, with ``rx`` used for
    both axes of a disk and as half-extents for a rectangle. Pixel ``(r, c)``
    belongs to the shape when its centre ``(c + 0.5, r + 0.5)`` does.
    """

    kind: str
    center: tuple
    radii: tuple
    intensity: float

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise InvalidArgumentError(f"shape kind must be one of {SHAPE_KINDS}, got {self.kind!r}")
        radii = tuple(float(r) for r in np.atleast_1d(self.radii))
        if len(radii) == 1:
            radii = radii * 2
        if len(radii) != 2 or min(radii) <= 0:
            raise InvalidArgumentError(f"radii must be positive, got {self.radii}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 <= self.intensity <= 1:
            raise InvalidArgumentError(f"intensity must lie in [0, 1], got {self.intensity}")

    @classmethod
    def from_dict(cls, values):
        return cls(values["kind"], tuple(values["center"]), values["radii"], values["intensity"])


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    shapes: tuple
    background_intensity: float = 0.1
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if not self.shapes:
            raise InvalidArgumentError("scene needs at least one shape")
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError(f"scene size must be >= 1, got {self.height}x{self.width}")
        if not 0 <= self.background_intensity <= 1:
            raise InvalidArgumentError("background_intensity must lie in [0, 1]")
        if self.noise_amplitude < 0:
            raise InvalidArgumentError("noise_amplitude must be >= 0")

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values["shapes"] = [
            s if isinstance(s, Shape) else Shape.from_dict(s) for s in values["shapes"]
        ]
        return cls(**values)

    def to_dict(self):
        return {
            "height": self.height,
            "width": self.width,
            "shapes": [
                {"kind": s.kind, "center": list(s.center), "radii": list(s.radii),
                 "intensity": s.intensity}
                for s in self.shapes
            ],
            "background_intensity": self.background_intensity,
            "noise_amplitude": self.noise_amplitude,
            "seed": self.seed,
        }


def rasterize(shape, height, width):
    """Boolean ``(height, width)`` mask of pixels whose centre lies in ``shape``."""
    y, x = np.mgrid[0:height, 0:width] + 0.5
    cx, cy = shape.center
    rx, ry = shape.radii
    if shape.kind == "disk":
        return (x - cx) ** 2 + (y - cy) ** 2 <= rx * rx
    if shape.kind == "ellipse":
        return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0
    return (np.abs(x - cx) <= rx) & (np.abs(y - cy) <= ry)


def _box_of(mask, id, margin):
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    height, width = mask.shape
    return BoxAnnotation(
        id,
        max(cols[0] - margin, 0),
        max(rows[0] - margin, 0),
        min(cols[-1] + 1 + margin, width),
        min(rows[-1] + 1 + margin, height),
    )


def generate_scene(spec):
    """Render ``spec`` and return ``(image, boxes, truth_masks)``.

    Shapes are painted in order over the background, so later shapes occlude
    earlier ones in the image while each ground-truth mask stays the full
    analytic shape. Boxes are the tight boxes dilated by 2 pixels and clipped;
    ids count from 1. Noise is uniform in ``[-a, a]`` from
    ``numpy.random.default_rng(seed)``, then the image is clipped to [0, 1].
    """
    image = np.full((spec.height, spec.width), float(spec.background_intensity))
    boxes, truths = [], []
    for k, shape in enumerate(spec.shapes, start=1):
        mask = rasterize(shape, spec.height, spec.width)
        if not mask.any():
            raise InvalidArgumentError(f"shape {k} ({shape.kind}) lies outside the image")
        image[mask] = shape.intensity
        boxes.append(_box_of(mask, k, BOX_MARGIN))
        truths.append(mask.astype(np.uint8))
    if spec.noise_amplitude > 0:
        rng = np.random.default_rng(spec.seed)
        image += rng.uniform(-spec.noise_amplitude, spec.noise_amplitude, image.shape)
        image = np.clip(image, 0.0, 1.0)
    return PixelGrid(image), boxes, truths


def evaluate_iou(pred, truth):
    """Intersection over union of two binary masks; 1.0 when both are empty."""
    pred = pred.mask if isinstance(pred, InstanceMask) else np.asarray(pred)
    truth = truth.mask if isinstance(truth, InstanceMask) else np.asarray(truth)
    if pred.shape != truth.shape:
        raise InvalidArgumentError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    pred = pred.astype(bool)
    truth = truth.astype(bool)
    union = np.count_nonzero(pred | truth)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred & truth) / union

"""Full-image, multi-box segmentation."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    EvolutionConfig,
    InvalidArgumentError,
    NumericalFailure,
    crop,
    full_box,
)
from .evolution import evolve, initialize_phi
from .features import build_feature_stack, normalize_image

__all__ = ["SegmentationResult", "segment_image", "resolve_labels"]

log = logging.getLogger(__name__)


@dataclass
class SegmentationResult:
    """Per-instance masks (sorted by id), their mean final objective and a label map.

    ``failures`` maps the id of every instance whose evolution broke down
    numerically to the error message; such instances have no mask.
    """

    masks: list
    mean_objective: float
    label_map: np.ndarray
    failures: dict = field(default_factory=dict)

    def by_id(self):
        return {m.id: m for m in self.masks}


def resolve_labels(masks, shape):
    """Label map where each pixel goes to the covering instance with the highest
    probability; ties go to the smaller id, uncovered pixels are 0."""
    labels = np.zeros(shape, dtype=np.int64)
    best = np.full(shape, -np.inf)
    for m in sorted(masks, key=lambda m: m.id):
        score = np.where(m.mask == 1, m.probability, -np.inf)
        # strict comparison keeps the earlier (smaller) id on ties
        take = (m.mask == 1) & (score > best)
        labels[take] = m.id
        best[take] = score[take]
    return labels


def _segment_one(box, image_term, feature_term, config, shape):
    height, width = shape
    if config.restrict_to_box:
        frame = box
        region = None
    else:
        frame = full_box(height, width, box.id)
        region = np.zeros(shape)
        region[box.slices] = 1.0
    phi0 = initialize_phi(box, config.init_mode, config.init_scale, frame=frame)
    return evolve(
        phi0,
        crop(image_term, frame),
        crop(feature_term, frame),
        config,
        box_region=region,
        image_shape=shape,
        instance_id=box.id,
    )


def segment_image(image, boxes, config=None, workers=1):
    """Segment every annotated box of ``image`` independently.

    Parameters
    ----------
    image : PixelGrid
        Raw image; normalised internally.
    boxes : list of BoxAnnotation
    config : EvolutionConfig, optional
    workers : int
        Number of threads evolving instances concurrently. Results do not
        depend on it.

    Returns
    -------
    SegmentationResult
    """
    config = config or EvolutionConfig()
    boxes = list(boxes)
    if not boxes:
        raise InvalidArgumentError("at least one box is required")
    ids = [b.id for b in boxes]
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError(f"duplicate box ids in {ids}")
    shape = (image.height, image.width)
    for box in boxes:
        if not box.fits(*shape):
            raise InvalidArgumentError(
                f"box {box.id} ({box.x0},{box.y0},{box.x1},{box.y1}) exceeds "
                f"{image.height}x{image.width} image"
            )

    image_term = normalize_image(image)
    feature_term = build_feature_stack(image_term, config).grid

    def run(box):
        try:
            return _segment_one(box, image_term, feature_term, config, shape)
        except NumericalFailure as exc:
            log.warning("instance %d failed: %s", box.id, exc)
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, boxes))
    else:
        outcomes = [run(box) for box in boxes]

    masks, failures = [], {}
    for box, outcome in zip(boxes, outcomes):
        if isinstance(outcome, NumericalFailure):
            failures[box.id] = str(outcome)
        else:
            masks.append(outcome)
    masks.sort(key=lambda m: m.id)
    mean_objective = float(np.mean([m.final_objective for m in masks])) if masks else float("nan")
    return SegmentationResult(masks, mean_objective, resolve_labels(masks, shape), failures)
